"""Monte Carlo robustness studies on the photonic network.

One Monte Carlo iteration means: draw one set of perturbed parameters
for every device in scope, freeze the resulting network, evaluate it on
the whole test set, and record the accuracy.  Perturbed layer matrices
are computed once per draw and reused across all test images.

The global sweep (EXP1) perturbs every MZI including the diagonal
stage, for each combination of sigma and mode.  The zonal study (EXP2)
elevates sigma inside one 2x2 zone of one mesh while the rest of the
network sits at the base sigma; the diagonal stages stay error-free
with their singular values arranged in a seeded random order.  The RVD
study perturbs a single MZI of a standalone unitary mesh at a time and
averages the relative-variation distance of the realized matrix.

Iterations are independent tasks; when a worker pool is used, results
are reduced in iteration-index order, so outputs are identical at any
worker count.
"""

import multiprocessing
from dataclasses import dataclass

import numpy as np

from .mesh import (
    LayerPerturbation,
    clements_decompose,
    params_array,
    reconstruct,
    reconstruct_batch,
    sigma_params_array,
)
from .network import PhotonicSPNN, SPNNModel, forward_batch, photonic_matrices
from .uncertainty import (
    BES_ONLY,
    BOTH,
    MODES,
    PHS_ONLY,
    PerturbationSpec,
    _apply_noise,
    per_mzi_sigmas,
    philox_generator,
    zone_grid_shape,
    zone_partition,
)

__all__ = [
    "Exp1Record",
    "Exp2Heatmap",
    "summarize",
    "network_zones",
    "run_exp1",
    "run_exp2",
    "run_rvd_study",
    "exp1_records_to_csv",
    "exp2_to_dict",
]

# Keying slots: layer i uses 3i (U mesh), 3i+1 (V mesh), 3i+2 (diagonal
# stage).  The singular-value permutation of EXP2 draws from its own slot.
_PERM_SLOT = 0x7FFF


@dataclass(frozen=True)
class Exp1Record:
    """Accuracy statistics for one (sigma, mode) cell of the sweep."""

    sigma: float
    mode: str
    iterations: int
    mean_accuracy: float
    std_accuracy: float
    ci95_margin: float


@dataclass
class Exp2Heatmap:
    """Per-zone accuracy-loss grid (percentage points) for one mesh."""

    mesh_id: str
    grid: np.ndarray
    ci_grid: np.ndarray
    base_sigma: float
    zonal_sigma: float
    iterations: int


def summarize(samples):
    """Sample mean, sample std (n-1 denominator) and 95% CI margin.

    The margin is 1.96 * std / sqrt(n).  A single sample has zero std
    by convention.  Raises ValueError on empty input.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.size == 0:
        raise ValueError("cannot summarize an empty sample list")
    mean = float(arr.mean())
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    margin = 1.96 * std / np.sqrt(arr.size)
    return mean, std, float(margin)


def _mesh_table(pnn):
    """Display-ordered (mesh_id, layer_idx, attr, slot) for the six meshes."""
    out = []
    for i in range(len(pnn.layers)):
        out.append((f"U_L{i}", i, "u_mesh", 3 * i))
        out.append((f"Vh_L{i}", i, "v_mesh", 3 * i + 1))
    return out


def network_zones(pnn):
    """Zones of all unitary meshes with globally unique ids.

    Returns:
        (all_zones, zones_by_mesh) where zones_by_mesh maps mesh_id to
        that mesh's zone list.
    """
    all_zones = []
    zones_by_mesh = {}
    for mesh_id, layer_idx, attr, _slot in _mesh_table(pnn):
        mesh = getattr(pnn.layers[layer_idx], attr)
        zones = zone_partition(mesh.placements, mesh.n, mesh_id=mesh_id,
                               id_offset=len(all_zones))
        zones_by_mesh[mesh_id] = zones
        all_zones.extend(zones)
    return all_zones, zones_by_mesh


class _NetworkSampler:
    """Precomputed nominal parameter arrays plus the draw logic."""

    def __init__(self, pnn):
        self.pnn = pnn
        self.u_nominal = [params_array(layer.u_mesh) for layer in pnn.layers]
        self.v_nominal = [params_array(layer.v_mesh) for layer in pnn.layers]
        self.s_nominal = [sigma_params_array(layer) for layer in pnn.layers]

    def draw(self, spec, iteration, sigma_maps=None, perturb_sigma_stage=True):
        """One network-wide perturbation draw.

        Args:
            spec: PerturbationSpec.
            iteration: global iteration index for the stream keys.
            sigma_maps: optional {mesh_id: (sigma_phs, sigma_bes) per-MZI
                arrays} carrying zone-resolved sigmas.
            perturb_sigma_stage: include the diagonal-stage MZIs.

        Returns:
            (list of LayerPerturbation, clamp count)
        """
        from .uncertainty import draw_params

        perts = []
        clamps = 0
        for i in range(len(self.pnn.layers)):
            maps_u = sigma_maps.get(f"U_L{i}") if sigma_maps else (None, None)
            maps_v = sigma_maps.get(f"Vh_L{i}") if sigma_maps else (None, None)
            u_arr, c = draw_params(self.u_nominal[i], spec, 3 * i, iteration,
                                   maps_u[0], maps_u[1])
            clamps += c
            v_arr, c = draw_params(self.v_nominal[i], spec, 3 * i + 1, iteration,
                                   maps_v[0], maps_v[1])
            clamps += c
            s_arr = None
            if perturb_sigma_stage:
                s_arr, c = draw_params(self.s_nominal[i], spec, 3 * i + 2, iteration)
                clamps += c
            perts.append(LayerPerturbation(u=u_arr, v=v_arr, sigma=s_arr))
        return perts, clamps


def _accuracy_from_matrices(mats, features, labels):
    logp = forward_batch(mats, features)
    return float((logp.argmax(axis=1) == labels).mean())


_POOL_FN = None


def _pool_call(task):
    return _POOL_FN(task)


def _parallel_map(fn, tasks, workers):
    """Map fn over tasks, preserving task order in the result list.

    Worker processes are forked, so fn may close over arbitrary parent
    state; tasks and results must stay picklable (they are small
    tuples/floats here).
    """
    if workers <= 1:
        return [fn(t) for t in tasks]
    global _POOL_FN
    _POOL_FN = fn
    ctx = multiprocessing.get_context("fork")
    chunk = max(1, len(tasks) // (workers * 4))
    with ctx.Pool(workers) as pool:
        return pool.map(_pool_call, tasks, chunksize=chunk)


def _spec_for_mode(sigma, mode, seed):
    sp = sigma if mode in (PHS_ONLY, BOTH) else 0.0
    sb = sigma if mode in (BES_ONLY, BOTH) else 0.0
    return PerturbationSpec(sigma_phs=sp, sigma_bes=sb, mode=mode, seed=seed)


def run_exp1(pnn, dataset, sigmas, modes=MODES, n_iter=100, seed=0, workers=1):
    """Global-uncertainty sweep over (sigma, mode) cells.

    Args:
        pnn: PhotonicSPNN.
        dataset: (features (N, 16) complex, labels (N,)) test set.
        sigmas: nonempty list of normalized sigma values.
        modes: subset of MODES.
        n_iter: Monte Carlo iterations per cell.
        seed: base seed for the counter-based streams.
        workers: process count (1 = run in-process).

    Returns:
        (records, meta): Exp1Record list ordered sigma-major, and a meta
        dict with the nominal accuracy and clamp diagnostics.
    """
    if len(list(sigmas)) == 0:
        raise ValueError("sigma list must not be empty")
    if n_iter < 1:
        raise ValueError("n_iter must be at least 1")
    for mode in modes:
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
    features, labels = dataset
    labels = np.asarray(labels)
    sampler = _NetworkSampler(pnn)
    nominal_acc = _accuracy_from_matrices(photonic_matrices(pnn), features, labels)

    cells = [(float(s), mode) for s in sigmas for mode in modes]
    specs = [_spec_for_mode(s, mode, seed) for s, mode in cells]

    def eval_task(task):
        cell_idx, it = task
        perts, clamps = sampler.draw(specs[cell_idx], cell_idx * n_iter + it,
                                     perturb_sigma_stage=True)
        mats = photonic_matrices(pnn, perts)
        return _accuracy_from_matrices(mats, features, labels), clamps

    tasks = [(ci, it) for ci in range(len(cells)) for it in range(n_iter)]
    results = _parallel_map(eval_task, tasks, workers)

    records = []
    total_clamps = 0
    for ci, (sigma, mode) in enumerate(cells):
        accs = [results[ci * n_iter + it][0] for it in range(n_iter)]
        total_clamps += sum(results[ci * n_iter + it][1] for it in range(n_iter))
        mean, std, margin = summarize(accs)
        records.append(Exp1Record(sigma=sigma, mode=mode, iterations=n_iter,
                                  mean_accuracy=mean, std_accuracy=std,
                                  ci95_margin=margin))
    meta = {
        "nominal_accuracy": nominal_acc,
        "clamp_events": total_clamps,
        "test_size": int(labels.shape[0]),
    }
    return records, meta


def run_exp2(pnn, dataset, base_sigma=0.05, zonal_sigma=0.1, n_iter=25, seed=0,
             workers=1):
    """Zonal perturbation study producing one heatmap per unitary mesh.

    The network is rebuilt with each layer's singular values arranged in
    a seeded random order (the layers still realize the same weight
    matrices).  For every zone, that zone runs at zonal_sigma while all
    other zones of all meshes run at base_sigma; the diagonal stages are
    error-free.  Cell values are accuracy losses against the nominal
    photonic accuracy, in percentage points.

    Returns:
        (heatmaps, meta): Exp2Heatmap list in mesh display order, and a
        meta dict with baselines and the permutations used.
    """
    if n_iter < 1:
        raise ValueError("n_iter must be at least 1")
    features, labels = dataset
    labels = np.asarray(labels)

    # Rebuild with permuted singular-value order.
    mats = photonic_matrices(pnn)
    perm_rng = philox_generator(seed, _PERM_SLOT, 0)
    perms = [perm_rng.permutation(min(m.shape)) for m in mats]
    dims = (mats[0].shape[1],) + tuple(m.shape[0] for m in mats)
    model = SPNNModel(weights=mats, layer_dims=dims)
    permuted = PhotonicSPNN.from_model(model, sv_permutations=perms)

    sampler = _NetworkSampler(permuted)
    zones, zones_by_mesh = network_zones(permuted)
    n_zones = len(zones)
    baseline_input = _accuracy_from_matrices(mats, features, labels)
    baseline = _accuracy_from_matrices(photonic_matrices(permuted), features, labels)

    mesh_sizes = {mesh_id: len(getattr(permuted.layers[i], attr).placements)
                  for mesh_id, i, attr, _ in _mesh_table(permuted)}

    def sigma_maps_for(zone):
        spec = PerturbationSpec(
            sigma_phs=base_sigma, sigma_bes=base_sigma, mode=BOTH, seed=seed,
            zone_overrides={zone.zone_id: (zonal_sigma, zonal_sigma)})
        maps = {}
        for mesh_id, zs in zones_by_mesh.items():
            maps[mesh_id] = per_mzi_sigmas(zs, spec, mesh_sizes[mesh_id], n_zones)
        return spec, maps

    prepared = [sigma_maps_for(z) for z in zones]

    def eval_task(task):
        zone_idx, it = task
        spec, maps = prepared[zone_idx]
        perts, clamps = sampler.draw(spec, zone_idx * n_iter + it,
                                     sigma_maps=maps, perturb_sigma_stage=False)
        mats_drawn = photonic_matrices(permuted, perts)
        return _accuracy_from_matrices(mats_drawn, features, labels), clamps

    tasks = [(zi, it) for zi in range(n_zones) for it in range(n_iter)]
    results = _parallel_map(eval_task, tasks, workers)

    heatmaps = []
    total_clamps = 0
    for mesh_id, _i, _attr, _slot in _mesh_table(permuted):
        zs = zones_by_mesh[mesh_id]
        rows, cols = zone_grid_shape(zs)
        grid = np.zeros((rows, cols))
        ci_grid = np.zeros((rows, cols))
        for zone in zs:
            zi = zone.zone_id
            accs = [results[zi * n_iter + it][0] for it in range(n_iter)]
            total_clamps += sum(results[zi * n_iter + it][1] for it in range(n_iter))
            mean, _std, margin = summarize(accs)
            grid[zone.row, zone.col] = (baseline - mean) * 100.0
            ci_grid[zone.row, zone.col] = margin * 100.0
        heatmaps.append(Exp2Heatmap(mesh_id=mesh_id, grid=grid, ci_grid=ci_grid,
                                    base_sigma=base_sigma, zonal_sigma=zonal_sigma,
                                    iterations=n_iter))
    meta = {
        "baseline_accuracy_photonic": baseline,
        "baseline_accuracy_input_network": baseline_input,
        "sv_permutations": [p.tolist() for p in perms],
        "clamp_events": total_clamps,
        "n_zones": n_zones,
        "test_size": int(labels.shape[0]),
    }
    return heatmaps, meta


def run_rvd_study(unitaries, sigma=0.05, n_iter=1000, seed=0):
    """Average per-MZI RVD under single-MZI perturbation.

    For each input unitary and each MZI of its mesh, draws n_iter
    perturbations of that MZI alone (phases and splitters, lossless) and
    averages the relative-variation distance between the perturbed and
    nominal transfer matrices.

    Returns:
        list of (n_mzi,) arrays, one per input matrix.
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    tables = []
    for mi, u in enumerate(unitaries):
        mesh = clements_decompose(u)
        nominal = params_array(mesh)
        reference = reconstruct(mesh)
        ref_sum = np.sum(np.abs(reference))
        k_count = nominal.shape[0]
        avg = np.empty(k_count)
        for k in range(k_count):
            rng = philox_generator(seed, mi, k)
            z = rng.standard_normal((n_iter, 6))
            rows = np.repeat(nominal[k][None, :], n_iter, axis=0)
            drawn, _ = _apply_noise(rows, z, sigma, sigma, BOTH, True)
            batch = np.repeat(nominal[None, :, :], n_iter, axis=0)
            batch[:, k, :] = drawn
            realized = reconstruct_batch(mesh, batch)
            deviations = np.abs(realized - reference[None, :, :]).sum(axis=(1, 2))
            avg[k] = float(np.mean(deviations / ref_sum))
        tables.append(avg)
    return tables


def exp1_records_to_csv(records):
    """CSV text with schema sigma,mode,iterations,mean,std,ci95."""
    lines = ["sigma,mode,iterations,mean,std,ci95"]
    for r in records:
        lines.append(f"{r.sigma!r},{r.mode},{r.iterations},"
                     f"{r.mean_accuracy!r},{r.std_accuracy!r},{r.ci95_margin!r}")
    return "\n".join(lines) + "\n"


def exp2_to_dict(heatmaps, meta):
    """JSON-ready document for the zonal study results."""
    return {
        "meta": meta,
        "heatmaps": [
            {
                "mesh_id": h.mesh_id,
                "rows": int(h.grid.shape[0]),
                "cols": int(h.grid.shape[1]),
                "loss_pp": h.grid.tolist(),
                "ci95_pp": h.ci_grid.tolist(),
                "base_sigma": h.base_sigma,
                "zonal_sigma": h.zonal_sigma,
                "iterations": h.iterations,
            }
            for h in heatmaps
        ],
    }
