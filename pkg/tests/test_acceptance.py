"""Release gate: one test per shipped guarantee, with a summary line each.

Every test appends "criterion N: PASS/FAIL - detail" to the shared list
in conftest, printed as its own section after the run.  Tolerances and
budgets here are the published ones; the per-module test files cover the
same code at finer grain.
"""

import time

import numpy as np

import conftest
from spnn import network
from spnn.cli import main
from spnn.devices import mzi_deviation_common_k, mzi_deviation_first_order, mzi_transfer
from spnn.experiments import run_exp1, run_exp2, run_rvd_study, summarize
from spnn.linalg import haar_random_unitary
from spnn.mesh import clements_decompose, layer_from_weights, layer_transfer, reconstruct
from spnn.uncertainty import BES_ONLY, BOTH, MODES, PHS_ONLY

EXPECTED_GRIDS = {
    "U_L0": (4, 8),
    "Vh_L0": (4, 8),
    "U_L1": (4, 8),
    "Vh_L1": (4, 8),
    "U_L2": (3, 5),
    "Vh_L2": (4, 8),
}


def _report(num, ok, detail):
    line = f"criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_1_unitary_round_trip():
    rng = np.random.default_rng(101)
    t0 = time.monotonic()
    worst = 0.0
    for n in (2, 4, 5, 10, 16):
        for _ in range(100):
            u = haar_random_unitary(n, rng)
            residual = np.linalg.norm(reconstruct(clements_decompose(u)) - u)
            worst = max(worst, residual)
    seconds = time.monotonic() - t0
    ok = worst <= 1e-9 and seconds < 10.0
    _report(1, ok,
            f"500 Haar matrices, worst Frobenius residual {worst:.2e}, "
            f"{seconds:.2f}s")


def test_criterion_2_layer_round_trip(photonic):
    rng = np.random.default_rng(202)
    worst = 0.0
    for shape in ((16, 16), (10, 16)):
        for _ in range(100):
            w = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
            layer = layer_from_weights(w)
            rel = np.linalg.norm(layer_transfer(layer) - w) / np.linalg.norm(w)
            worst = max(worst, rel)
    counts = [layer.mzi_count() for layer in photonic.layers]
    census_ok = (counts == [256, 256, 175]
                 and photonic.mzi_count() == 687
                 and photonic.phase_shifter_count() == 1374)
    ok = worst <= 1e-8 and census_ok
    _report(2, ok,
            f"200 weight matrices, worst relative error {worst:.2e}, "
            f"census {counts} -> {photonic.mzi_count()} MZIs / "
            f"{photonic.phase_shifter_count()} shifters")


def test_criterion_3_deviation_model():
    theta, phi = 1.3, 0.7
    errors = {}
    for delta in (1e-3, 1e-4):
        approx = (mzi_transfer(theta, phi)
                  + mzi_deviation_first_order(theta, phi, delta, delta))
        exact = mzi_transfer(theta + delta, phi + delta)
        errors[delta] = np.max(np.abs(exact - approx))
    ratio = errors[1e-3] / errors[1e-4]
    scaling_ok = 50.0 <= ratio <= 200.0

    k = 0.05
    thetas = np.linspace(0.05, 2 * np.pi - 0.05, 100)
    rel = np.array([
        abs(mzi_deviation_common_k(t, 0.0, k)[1, 1])
        / abs(mzi_transfer(t, 0.0)[1, 1])
        for t in thetas
    ])
    mono_ok = bool(np.all(np.diff(rel) > 0))
    ok = scaling_ok and mono_ok
    _report(3, ok,
            f"first-order error ratio at 10x step {ratio:.1f} (second order), "
            f"through-port deviation strictly increasing: {mono_ok}")


def test_criterion_4_training(trained):
    acc = trained["test_accuracy"]
    seconds = trained["seconds"]
    ok = acc >= 0.85 and seconds < 600.0
    _report(4, ok, f"held-out accuracy {acc:.4f} after {seconds:.1f}s training")


def test_criterion_5_global_uncertainty_sweep(photonic, dataset):
    testset = (dataset["test_features"], dataset["test_labels"])
    sigmas = (0.005, 0.025, 0.05, 0.075, 0.1)
    t0 = time.monotonic()
    records, meta = run_exp1(photonic, testset, sigmas, n_iter=100, seed=0)
    seconds = time.monotonic() - t0

    by_mode = {m: sorted((r for r in records if r.mode == m),
                         key=lambda r: r.sigma) for m in MODES}
    mono_ok = all(
        seq[i + 1].mean_accuracy
        <= seq[i].mean_accuracy + seq[i].ci95_margin + seq[i + 1].ci95_margin
        for seq in by_mode.values() for i in range(len(seq) - 1))
    both = {r.sigma: r for r in by_mode[BOTH]}
    mid = both[0.05].mean_accuracy
    mid_ok = 0.08 <= mid <= 0.35
    tail_ok = all(both[s].mean_accuracy <= 0.15 for s in (0.075, 0.1))
    phs = {r.sigma: r for r in by_mode[PHS_ONLY]}
    bes = {r.sigma: r for r in by_mode[BES_ONLY]}
    order_ok = all(
        phs[s].mean_accuracy
        <= bes[s].mean_accuracy + phs[s].ci95_margin + bes[s].ci95_margin
        for s in (0.025, 0.05, 0.075, 0.1))
    time_ok = seconds < 900.0
    ok = mono_ok and mid_ok and tail_ok and order_ok and time_ok
    _report(5, ok,
            f"Both@0.05 mean {mid:.3f}, monotone {mono_ok}, "
            f"tail<=0.15 {tail_ok}, phases hurt more {order_ok}, {seconds:.0f}s")


def test_criterion_6_zonal_heatmaps(photonic, dataset):
    testset = (dataset["test_features"], dataset["test_labels"])
    t0 = time.monotonic()
    heatmaps, meta = run_exp2(photonic, testset, base_sigma=0.05,
                              zonal_sigma=0.1, n_iter=25, seed=0)
    seconds = time.monotonic() - t0
    shapes = {h.mesh_id: h.grid.shape for h in heatmaps}
    shapes_ok = shapes == EXPECTED_GRIDS
    cells = np.concatenate([h.grid.ravel() for h in heatmaps])
    margins = np.concatenate([h.ci_grid.ravel() for h in heatmaps])
    spread = cells.max() - cells.min()
    noise = float(np.median(margins))
    signal_ok = spread > 2.0 * noise
    ok = shapes_ok and signal_ok
    _report(6, ok,
            f"175 zones in 6 grids, spread {spread:.2f}pp vs median CI "
            f"{noise:.2f}pp, {seconds:.0f}s")


def test_criterion_7_mzi_sensitivity_profile():
    rng = np.random.default_rng(707)
    mats = [haar_random_unitary(5, rng) for _ in range(4)]
    tables = run_rvd_study(mats, sigma=0.05, n_iter=1000, seed=0)
    ratios = [float(t.max() / t.min()) for t in tables]
    ratio_ok = all(r > 1.0 for r in ratios)
    profiles = {tuple(np.argsort(t)) for t in tables}
    profile_ok = len(profiles) > 1
    ok = ratio_ok and profile_ok
    _report(7, ok,
            f"max/min avg RVD per matrix {[f'{r:.2f}' for r in ratios]}, "
            f"{len(profiles)} distinct sensitivity orderings")


def test_criterion_8_interval_machinery():
    rng = np.random.default_rng(808)
    samples = rng.normal(0.5, 0.1, size=1000)
    _, std, margin = summarize(samples)
    exact_ok = margin == 1.96 * std / np.sqrt(1000)
    _, _, margin2 = summarize(np.tile(samples, 2))
    shrink = margin2 / margin
    shrink_ok = abs(shrink - 1.0 / np.sqrt(2.0)) <= 0.01 / np.sqrt(2.0)
    ok = exact_ok and shrink_ok
    _report(8, ok,
            f"margin formula exact {exact_ok}, doubling n shrinks margin by "
            f"{shrink:.4f} (target {1 / np.sqrt(2):.4f})")


def test_criterion_9_worker_determinism(trained, tmp_path):
    model_path = tmp_path / "model.json"
    net_path = tmp_path / "network.json"
    network.save_model(trained["model"], model_path)
    assert main(["decompose", "--model", str(model_path),
                 "--network", str(net_path)]) == 0

    from conftest import TEST_IMAGES, TEST_LABELS
    args = ["exp1", "--network", str(net_path),
            "--test-images", str(TEST_IMAGES),
            "--test-labels", str(TEST_LABELS),
            "--sigma-list", "0.05", "--iters", "4", "--subset", "200"]
    out_1 = tmp_path / "w1"
    out_2 = tmp_path / "w2"
    assert main(args + ["--workers", "1", "--out-dir", str(out_1)]) == 0
    assert main(args + ["--workers", "2", "--out-dir", str(out_2)]) == 0
    same = all(
        (out_1 / name).read_bytes() == (out_2 / name).read_bytes()
        for name in ("exp1.csv", "exp1_meta.json"))
    _report(9, same,
            "result files byte-identical across worker counts" if same
            else "result files differ between worker counts")
