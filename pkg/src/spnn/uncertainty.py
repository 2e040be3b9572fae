"""Gaussian uncertainty model for phase shifters and beam splitters.

Sigmas are normalized the way the device literature quotes them:
``sigma_phs`` is the phase standard deviation divided by 2 pi (so the
radian std is 2 pi * sigma_phs), and ``sigma_bes`` is sqrt(2) times the
amplitude standard deviation (so r is drawn with std sigma_bes / sqrt 2
around its nominal 1/sqrt 2).  A value of sigma_phs = 0.0334 therefore
corresponds to a phase error of about 0.21 radian.

Randomness is counter-based: every draw comes from a Philox generator
keyed by (seed, mesh slot, iteration), with a fixed (K, 6) block layout
[theta, phi, r1, r2, t1, t2] per mesh.  Each sampled value is then a
pure function of (seed, mesh, iteration, mzi, field), so results do not
depend on evaluation order or worker count.  The full block is always
drawn even when the mode masks some fields, keeping the stream layout
mode-independent.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PHS_ONLY",
    "BES_ONLY",
    "BOTH",
    "MODES",
    "PerturbationSpec",
    "Zone",
    "philox_generator",
    "sample_perturbed",
    "draw_params",
    "zone_partition",
    "zone_grid_shape",
    "effective_sigmas",
    "per_mzi_sigmas",
]

PHS_ONLY = "PhsOnly"
BES_ONLY = "BesOnly"
BOTH = "Both"
MODES = (PHS_ONLY, BES_ONLY, BOTH)

_SQRT2 = np.sqrt(2.0)
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class PerturbationSpec:
    """Gaussian uncertainty configuration for one experiment.

    zone_overrides maps a zone id to (sigma_phs, sigma_bes) pairs that
    replace the global sigmas for the MZIs of that zone.
    """

    sigma_phs: float
    sigma_bes: float
    mode: str = BOTH
    lossless_bes: bool = True
    zone_overrides: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}, expected one of {MODES}")
        for name, val in (("sigma_phs", self.sigma_phs), ("sigma_bes", self.sigma_bes)):
            if val < 0:
                raise ValueError(f"{name} must be nonnegative, got {val}")
        # The mode decides which fields may vary; a nonzero sigma for a
        # masked field would silently do nothing, so reject it.
        pairs = [(self.sigma_phs, self.sigma_bes)]
        pairs += list(self.zone_overrides.values())
        for sp, sb in pairs:
            if self.mode == PHS_ONLY and sb != 0:
                raise ValueError("PhsOnly mode requires sigma_bes = 0")
            if self.mode == BES_ONLY and sp != 0:
                raise ValueError("BesOnly mode requires sigma_phs = 0")


@dataclass(frozen=True)
class Zone:
    """A 2x2 block of adjacent MZIs in one mesh's (column, row-slot) grid."""

    zone_id: int
    mesh_id: str
    row: int
    col: int
    member_mzi_ids: tuple


def philox_generator(seed, mesh_slot, iteration):
    """Counter-based generator for one (mesh, iteration) cell.

    The key packs the user seed in one 64-bit word and the mesh slot and
    iteration index in the other, so streams never collide across
    meshes or iterations.
    """
    if iteration < 0 or iteration >= (1 << 48):
        raise ValueError(f"iteration index {iteration} out of range")
    if mesh_slot < 0 or mesh_slot >= (1 << 16):
        raise ValueError(f"mesh slot {mesh_slot} out of range")
    key = np.array([seed & _MASK64, (mesh_slot << 48) | iteration], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _apply_noise(nominal, z, sigma_phs, sigma_bes, mode, lossless_bes):
    """Turn standard-normal draws into perturbed parameter rows.

    Args:
        nominal: (K, 6) nominal parameters [theta, phi, r1, t1, r2, t2].
        z: (K, 6) standard normals, layout [theta, phi, r1, r2, t1, t2].
        sigma_phs, sigma_bes: scalars or (K,) arrays of normalized sigmas.
        mode: one of MODES.
        lossless_bes: couple t to r via r^2 + t^2 = 1 when True.

    Returns:
        (perturbed (K, 6) array, number of clamped amplitude draws)
    """
    out = nominal.copy()
    sigma_phs = np.asarray(sigma_phs, dtype=float)
    sigma_bes = np.asarray(sigma_bes, dtype=float)
    clamped = 0
    if mode in (PHS_ONLY, BOTH) and np.any(sigma_phs != 0):
        std = 2.0 * np.pi * sigma_phs
        out[:, 0] = nominal[:, 0] + z[:, 0] * std
        out[:, 1] = nominal[:, 1] + z[:, 1] * std
    if mode in (BES_ONLY, BOTH) and np.any(sigma_bes != 0):
        std = sigma_bes / _SQRT2
        r1 = nominal[:, 2] + z[:, 2] * std
        r2 = nominal[:, 4] + z[:, 3] * std
        clamped += int(np.sum((r1 < 0) | (r1 > 1)) + np.sum((r2 < 0) | (r2 > 1)))
        r1 = np.clip(r1, 0.0, 1.0)
        r2 = np.clip(r2, 0.0, 1.0)
        out[:, 2] = r1
        out[:, 4] = r2
        if lossless_bes:
            out[:, 3] = np.sqrt(1.0 - r1**2)
            out[:, 5] = np.sqrt(1.0 - r2**2)
        else:
            t1 = nominal[:, 3] + z[:, 4] * std
            t2 = nominal[:, 5] + z[:, 5] * std
            clamped += int(np.sum((t1 < 0) | (t1 > 1)) + np.sum((t2 < 0) | (t2 > 1)))
            out[:, 3] = np.clip(t1, 0.0, 1.0)
            out[:, 5] = np.clip(t2, 0.0, 1.0)
        if sigma_bes.ndim > 0:
            # Zone-resolved draws: rows whose effective sigma is zero
            # must come back bit-identical, so undo the lossless
            # recoupling there (sqrt(1 - r^2) moves t by an ulp).
            quiet = sigma_bes == 0
            out[quiet, 2:] = nominal[quiet, 2:]
    return out, clamped


def sample_perturbed(params, spec, zone_sigma, rng):
    """Draw perturbed parameters for a single MZI.

    Args:
        params: nominal MZIParams.
        spec: PerturbationSpec (mode and losslessness are read from it).
        zone_sigma: (sigma_phs, sigma_bes) effective for this device.
        rng: numpy Generator owned by the caller.

    Returns:
        a new MZIParams with the sampled values.
    """
    from .devices import MZIParams

    nominal = np.array([[params.theta, params.phi, params.r1, params.t1,
                         params.r2, params.t2]])
    z = rng.standard_normal((1, 6))
    out, _ = _apply_noise(nominal, z, zone_sigma[0], zone_sigma[1],
                          spec.mode, spec.lossless_bes)
    row = out[0]
    return MZIParams(theta=row[0], phi=row[1], r1=row[2], t1=row[3],
                     r2=row[4], t2=row[5])


def draw_params(nominal, spec, mesh_slot, iteration, sigma_phs=None, sigma_bes=None):
    """Draw a full perturbed parameter array for one mesh and iteration.

    Args:
        nominal: (K, 6) nominal parameter array.
        spec: PerturbationSpec supplying seed, mode, losslessness and the
            default sigmas.
        mesh_slot: integer keying slot of this mesh within the network.
        iteration: Monte Carlo iteration index.
        sigma_phs, sigma_bes: optional per-MZI (K,) sigma arrays (for
            zone-resolved values); default to the spec's global sigmas.

    Returns:
        (perturbed (K, 6) array, clamp count)
    """
    k = nominal.shape[0]
    rng = philox_generator(spec.seed, mesh_slot, iteration)
    z = rng.standard_normal((k, 6))
    if sigma_phs is None:
        sigma_phs = spec.sigma_phs
    if sigma_bes is None:
        sigma_bes = spec.sigma_bes
    return _apply_noise(nominal, z, sigma_phs, sigma_bes, spec.mode,
                        spec.lossless_bes)


def zone_partition(layout, n, mesh_id="mesh", id_offset=0):
    """Partition a mesh layout into 2x2 zones.

    Zone cell coordinates are row = (top_wire // 2) // 2 and
    col = column // 2, tiling the Clements grid; edge zones may hold
    fewer than four MZIs.  Zone ids are assigned row-major starting at
    id_offset.

    Returns:
        list of Zone, sorted by (row, col).
    """
    cells = {}
    for p in layout:
        cell = ((p.top_wire // 2) // 2, p.column // 2)
        cells.setdefault(cell, []).append(p.mzi_id)
    zones = []
    for idx, (cell, members) in enumerate(sorted(cells.items())):
        zones.append(Zone(
            zone_id=id_offset + idx,
            mesh_id=mesh_id,
            row=cell[0],
            col=cell[1],
            member_mzi_ids=tuple(sorted(members)),
        ))
    return zones


def zone_grid_shape(zones):
    """(rows, cols) extent of a single mesh's zone grid."""
    rows = max(z.row for z in zones) + 1
    cols = max(z.col for z in zones) + 1
    return rows, cols


def effective_sigmas(spec, zone_id, n_zones):
    """Sigmas in force for a zone: the override if present, else global.

    Raises ValueError for a zone id outside [0, n_zones).
    """
    if not 0 <= zone_id < n_zones:
        raise ValueError(f"unknown zone id {zone_id} (have {n_zones} zones)")
    if zone_id in spec.zone_overrides:
        return tuple(spec.zone_overrides[zone_id])
    return (spec.sigma_phs, spec.sigma_bes)


def per_mzi_sigmas(zones, spec, n_mzis, n_zones):
    """Resolve zone overrides into per-MZI sigma arrays for one mesh.

    Args:
        zones: this mesh's Zone list (global ids).
        spec: PerturbationSpec.
        n_mzis: MZI count of the mesh.
        n_zones: total zone count across the network (for validation).

    Returns:
        (sigma_phs (K,), sigma_bes (K,)) arrays.
    """
    sp = np.full(n_mzis, spec.sigma_phs)
    sb = np.full(n_mzis, spec.sigma_bes)
    for zone in zones:
        zsp, zsb = effective_sigmas(spec, zone.zone_id, n_zones)
        for mid in zone.member_mzi_ids:
            sp[mid] = zsp
            sb[mid] = zsb
    return sp, sb
