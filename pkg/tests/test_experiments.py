import numpy as np
import pytest

from spnn import experiments
from spnn.experiments import (
    exp1_records_to_csv,
    exp2_to_dict,
    network_zones,
    run_exp1,
    run_exp2,
    run_rvd_study,
    summarize,
)
from spnn.linalg import haar_random_unitary
from spnn.uncertainty import BES_ONLY, BOTH, MODES, PHS_ONLY


@pytest.fixture(scope="module")
def small_testset(dataset):
    return dataset["test_features"][:100], dataset["test_labels"][:100]


class TestSummarize:
    def test_constant_samples(self):
        mean, std, margin = summarize([0.5] * 10)
        assert mean == 0.5
        assert std == 0.0
        assert margin == 0.0

    def test_two_point_sample(self):
        mean, std, margin = summarize([0.0, 1.0])
        assert mean == 0.5
        assert abs(std - np.sqrt(0.5)) <= 1e-12
        assert abs(margin - 1.96 * np.sqrt(0.5) / np.sqrt(2)) <= 1e-12

    def test_margin_formula(self):
        rng = np.random.default_rng(0)
        samples = rng.normal(0.8, 0.03, size=250)
        mean, std, margin = summarize(samples)
        assert margin == pytest.approx(1.96 * std / np.sqrt(250), rel=1e-12)

    def test_single_sample(self):
        mean, std, margin = summarize([0.7])
        assert (mean, std, margin) == (0.7, 0.0, 0.0)

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            summarize([])


@pytest.fixture(scope="module")
def sweep(photonic, small_testset):
    return run_exp1(photonic, small_testset, sigmas=(0.0, 0.05), n_iter=2, seed=0)


class TestExp1:
    def test_record_layout(self, sweep):
        records, meta = sweep
        assert len(records) == 2 * len(MODES)
        assert [r.sigma for r in records[:3]] == [0.0, 0.0, 0.0]
        assert [r.mode for r in records[:3]] == list(MODES)
        assert all(r.iterations == 2 for r in records)
        assert meta["test_size"] == 100

    def test_zero_sigma_reproduces_nominal(self, sweep):
        records, meta = sweep
        for r in records:
            if r.sigma == 0.0:
                assert abs(r.mean_accuracy - meta["nominal_accuracy"]) <= 1e-12
                assert r.std_accuracy <= 1e-12

    def test_nonzero_sigma_degrades(self, sweep):
        records, meta = sweep
        both = [r for r in records if r.sigma == 0.05 and r.mode == BOTH]
        assert both[0].mean_accuracy < meta["nominal_accuracy"]

    def test_worker_count_does_not_change_results(self, photonic, small_testset):
        serial = run_exp1(photonic, small_testset, sigmas=(0.03,),
                          modes=(PHS_ONLY,), n_iter=3, seed=1, workers=1)
        pooled = run_exp1(photonic, small_testset, sigmas=(0.03,),
                          modes=(PHS_ONLY,), n_iter=3, seed=1, workers=2)
        for a, b in zip(serial[0], pooled[0]):
            assert a == b

    def test_repeatable(self, photonic, small_testset, sweep):
        records, _ = run_exp1(photonic, small_testset, sigmas=(0.0, 0.05),
                              n_iter=2, seed=0)
        assert records == sweep[0]

    def test_empty_sigmas_raises(self, photonic, small_testset):
        with pytest.raises(ValueError):
            run_exp1(photonic, small_testset, sigmas=())

    def test_bad_mode_raises(self, photonic, small_testset):
        with pytest.raises(ValueError):
            run_exp1(photonic, small_testset, sigmas=(0.05,), modes=("half",))

    def test_csv_schema(self, sweep):
        records, _ = sweep
        text = exp1_records_to_csv(records)
        lines = text.strip().split("\n")
        assert lines[0] == "sigma,mode,iterations,mean,std,ci95"
        assert len(lines) == 1 + len(records)
        first = lines[1].split(",")
        assert first[1] in MODES
        assert float(first[0]) == records[0].sigma


EXPECTED_GRIDS = {
    "U_L0": (4, 8),
    "Vh_L0": (4, 8),
    "U_L1": (4, 8),
    "Vh_L1": (4, 8),
    "U_L2": (3, 5),
    "Vh_L2": (4, 8),
}


@pytest.fixture(scope="module")
def zonal(photonic, dataset):
    subset = dataset["test_features"][:200], dataset["test_labels"][:200]
    return run_exp2(photonic, subset, base_sigma=0.05, zonal_sigma=0.1,
                    n_iter=2, seed=0)


class TestExp2:
    def test_heatmap_shapes(self, zonal):
        heatmaps, meta = zonal
        assert [h.mesh_id for h in heatmaps] == list(EXPECTED_GRIDS)
        for h in heatmaps:
            assert h.grid.shape == EXPECTED_GRIDS[h.mesh_id]
            assert h.ci_grid.shape == h.grid.shape
        assert meta["n_zones"] == 175

    def test_sv_permutations_recorded(self, zonal):
        _, meta = zonal
        perms = meta["sv_permutations"]
        assert [len(p) for p in perms] == [16, 16, 10]
        for p in perms:
            assert sorted(p) == list(range(len(p)))
        # The seeded orders should not all be the identity.
        assert any(p != sorted(p) for p in perms)

    def test_permuted_baseline_matches_input_network(self, zonal):
        _, meta = zonal
        a = meta["baseline_accuracy_photonic"]
        b = meta["baseline_accuracy_input_network"]
        assert abs(a - b) <= 1e-9

    def test_cell_values_plausible(self, zonal):
        heatmaps, _ = zonal
        cells = np.concatenate([h.grid.ravel() for h in heatmaps])
        # A 0.05 background sigma already collapses the network, so every
        # zone shows a large loss in percentage points.
        assert np.all(cells > 50.0)
        assert np.all(cells < 100.0)

    def test_degenerate_zonal_equals_base(self, photonic, dataset):
        subset = dataset["test_features"][:200], dataset["test_labels"][:200]
        heatmaps, _ = run_exp2(photonic, subset, base_sigma=0.05,
                               zonal_sigma=0.05, n_iter=2, seed=0)
        cells = np.concatenate([h.grid.ravel() for h in heatmaps])
        # Every zone now has the same sigma profile, but each zone draws
        # from its own stream, so cells agree only statistically.
        assert np.unique(cells).size > 1
        assert cells.max() - cells.min() < 30.0
        assert np.all(cells > 50.0)

    def test_to_dict_serializable(self, zonal):
        import json

        doc = exp2_to_dict(*zonal)
        text = json.dumps(doc)
        back = json.loads(text)
        assert len(back["heatmaps"]) == 6
        h0 = back["heatmaps"][0]
        assert h0["rows"] == 4 and h0["cols"] == 8
        assert len(h0["loss_pp"]) == 4 and len(h0["loss_pp"][0]) == 8

    def test_bad_iterations_raises(self, photonic, small_testset):
        with pytest.raises(ValueError):
            run_exp2(photonic, small_testset, n_iter=0)


class TestRvdStudy:
    def test_zero_sigma_zero_rvd(self):
        rng = np.random.default_rng(1)
        tables = run_rvd_study([haar_random_unitary(4, rng)], sigma=0.0,
                               n_iter=5)
        assert len(tables) == 1
        assert np.all(tables[0] == 0.0)

    def test_table_sizes(self):
        rng = np.random.default_rng(2)
        mats = [haar_random_unitary(5, rng) for _ in range(2)]
        tables = run_rvd_study(mats, sigma=0.05, n_iter=10)
        assert [t.shape for t in tables] == [(10,), (10,)]
        assert all(np.all(t > 0) for t in tables)

    def test_sensitivity_varies_across_mzis(self):
        rng = np.random.default_rng(3)
        tables = run_rvd_study([haar_random_unitary(5, rng)], sigma=0.05,
                               n_iter=50)
        t = tables[0]
        assert t.max() / t.min() > 1.1

    def test_negative_sigma_raises(self):
        with pytest.raises(ValueError):
            run_rvd_study([np.eye(4, dtype=complex)], sigma=-0.1)

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        u = haar_random_unitary(4, rng)
        a = run_rvd_study([u], sigma=0.05, n_iter=20, seed=9)
        b = run_rvd_study([u], sigma=0.05, n_iter=20, seed=9)
        assert np.array_equal(a[0], b[0])


class TestNetworkZones:
    def test_totals(self, photonic):
        all_zones, by_mesh = network_zones(photonic)
        assert len(all_zones) == 175
        assert {m: len(z) for m, z in by_mesh.items()} == {
            "U_L0": 32, "Vh_L0": 32, "U_L1": 32, "Vh_L1": 32,
            "U_L2": 15, "Vh_L2": 32,
        }

    def test_global_ids_unique_and_dense(self, photonic):
        all_zones, _ = network_zones(photonic)
        ids = sorted(z.zone_id for z in all_zones)
        assert ids == list(range(175))

    def test_display_order(self, photonic):
        all_zones, _ = network_zones(photonic)
        mesh_order = []
        for z in all_zones:
            if not mesh_order or mesh_order[-1] != z.mesh_id:
                mesh_order.append(z.mesh_id)
        assert mesh_order == ["U_L0", "Vh_L0", "U_L1", "Vh_L1", "U_L2", "Vh_L2"]
