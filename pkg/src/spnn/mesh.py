"""Mapping weight matrices onto rectangular MZI meshes.

A unitary U of size n is realized by a Clements-style rectangular grid of
n(n-1)/2 MZIs followed by a screen of per-wire output phases.  Columns
alternate between MZIs on even wire pairs (top wires 0, 2, ...) and odd
ones (1, 3, ...).  Arbitrary (rectangular) weight matrices go through the
SVD: M = U Sigma V^H, with the two unitary factors decomposed into meshes
and the diagonal realized by terminated MZIs whose through-amplitude is
sin(theta/2), normalized by a global gain beta.

The decomposition works directly in the transfer-matrix convention of
``devices.mzi_transfer`` (phase shifters on the upper arm).  Nulling
sweeps run over the subdiagonals of U: depending on the parity of the
subdiagonal relative to n, entries are eliminated either by multiplying
an inverse MZI from the right (acting on column pairs) or an MZI from
the left (acting on row pairs).  Leftover left factors are commuted
through the final diagonal by refactoring 2x2 blocks as diag * T.
"""

from dataclasses import dataclass, field

import numpy as np

from .devices import INV_SQRT2, MZIParams, mzi_entries_imperfect, mzi_transfer
from .linalg import as_cmatrix, svd

__all__ = [
    "MZIPlacement",
    "DecomposedUnitary",
    "PhotonicLinearLayer",
    "LayerPerturbation",
    "clements_layout",
    "clements_decompose",
    "reconstruct",
    "reconstruct_batch",
    "params_array",
    "sigma_params_array",
    "synthesize_diagonal",
    "sigma_diag_values",
    "layer_from_weights",
    "layer_transfer",
    "mesh_to_dict",
    "mesh_from_dict",
    "layer_to_dict",
    "layer_from_dict",
]

TWO_PI = 2.0 * np.pi


def _canon_angle(x):
    """Fold into [0, 2 pi); the % operator alone can round up to 2 pi."""
    out = np.asarray(x) % TWO_PI
    return np.where(out >= TWO_PI, 0.0, out)


@dataclass(frozen=True)
class MZIPlacement:
    """Grid position of one MZI: mesh column, upper wire, sequential id."""

    column: int
    top_wire: int
    mzi_id: int


@dataclass
class DecomposedUnitary:
    """A Clements mesh: placements, per-MZI parameters, output phases."""

    n: int
    placements: list
    params: list
    output_phases: np.ndarray

    def __post_init__(self):
        expect = self.n * (self.n - 1) // 2
        if len(self.placements) != expect:
            raise ValueError(
                f"mesh of size {self.n} needs {expect} MZIs, got {len(self.placements)}")
        if len(self.params) != len(self.placements):
            raise ValueError("params not aligned with placements")
        self.output_phases = np.asarray(self.output_phases, dtype=float)
        if self.output_phases.shape != (self.n,):
            raise ValueError("output_phases must have one entry per wire")


@dataclass
class PhotonicLinearLayer:
    """Photonic realization of one weight matrix M = U Sigma V^H.

    v_mesh realizes V^H (size n_in), u_mesh realizes U (size n_out); the
    diagonal stage holds min(n_in, n_out) terminated MZIs whose through
    amplitudes are the singular values divided by the gain beta.
    """

    u_mesh: DecomposedUnitary
    v_mesh: DecomposedUnitary
    sigma_thetas: np.ndarray
    sigma_phis: np.ndarray
    beta: float
    n_in: int
    n_out: int

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta gain must be positive")
        self.sigma_thetas = np.asarray(self.sigma_thetas, dtype=float)
        self.sigma_phis = np.asarray(self.sigma_phis, dtype=float)
        r = min(self.n_in, self.n_out)
        if self.sigma_thetas.shape != (r,) or self.sigma_phis.shape != (r,):
            raise ValueError(f"diagonal stage needs {r} terminated MZIs")

    @property
    def n_sigma(self):
        return min(self.n_in, self.n_out)

    def mzi_count(self):
        """Total MZIs: both meshes plus the terminated diagonal stage."""
        return (len(self.u_mesh.placements) + len(self.v_mesh.placements)
                + self.n_sigma)


@dataclass
class LayerPerturbation:
    """Per-draw parameter overrides for one layer; None parts stay nominal.

    u and v are (K, 6) arrays aligned with the mesh placements, columns
    [theta, phi, r1, t1, r2, t2]; sigma is (n_sigma, 6) for the
    terminated MZIs of the diagonal stage.
    """

    u: np.ndarray | None = None
    v: np.ndarray | None = None
    sigma: np.ndarray | None = None


def clements_layout(n):
    """Rectangular mesh layout for an n x n unitary.

    Columns 0..n-1; even columns host MZIs with top wires 0, 2, ...,
    odd columns 1, 3, ...; ids are assigned column-major with top_wire
    ascending.

    Raises ValueError for n < 2.
    """
    if n < 2:
        raise ValueError(f"mesh size must be at least 2, got {n}")
    placements = []
    for col in range(n):
        start = 0 if col % 2 == 0 else 1
        for top in range(start, n - 1, 2):
            placements.append(MZIPlacement(col, top, len(placements)))
    return placements


def _left_null_angles(a, b):
    # Left-multiplying T on rows (i-1, i) sends row i of the column to
    # i e^{i theta/2}(e^{i phi} cos(theta/2) a - sin(theta/2) b); with
    # theta = 2 atan2(|a|, |b|) and phi = arg(b) - arg(a) it vanishes.
    if a == 0 and b == 0:
        # Degenerate pair: any angles keep the element null; pick the
        # bar state so wires the input never couples stay unmixed.
        return np.pi, 0.0
    theta = 2.0 * np.arctan2(abs(a), abs(b))
    phi = (np.angle(b) - np.angle(a)) if (abs(a) > 0 and abs(b) > 0) else 0.0
    return theta, phi % TWO_PI


def _right_null_angles(a, b):
    # Right-multiplying T^dagger on columns (j, j+1) nulls entry (i, j)
    # when theta = 2 atan2(|b|, |a|) and phi = arg(a) - arg(b) - pi.
    if a == 0 and b == 0:
        return np.pi, 0.0
    theta = 2.0 * np.arctan2(abs(b), abs(a))
    phi = (np.angle(a) - np.angle(b) - np.pi) if (abs(a) > 0 and abs(b) > 0) else 0.0
    return theta, phi % TWO_PI


def _apply_left(v, m, theta, phi):
    t = mzi_transfer(theta, phi)
    v[m:m + 2, :] = t @ v[m:m + 2, :]


def _apply_right_dagger(v, m, theta, phi):
    t = mzi_transfer(theta, phi)
    v[:, m:m + 2] = v[:, m:m + 2] @ t.conj().T


def _factor_diag_times_t(w):
    """Refactor a 2x2 unitary as diag(d1, d2) @ T(theta, phi).

    Used to push left-factor inverses through the output diagonal.  The
    theta branch is fixed by |T11| = sin(theta/2), |T21| = cos(theta/2).
    """
    s, c = abs(w[0, 0]), abs(w[1, 0])
    theta = 2.0 * np.arctan2(s, c)
    if s < 1e-12:
        # theta = 0: T = [[0, i],[i e^{i phi}, 0]]; take phi = 0.
        return 0.0, 0.0, -1j * w[0, 1], -1j * w[1, 0]
    if c < 1e-12:
        # theta = pi: T = diag(-e^{i phi}, 1); take phi = 0.
        return np.pi, 0.0, -w[0, 0], w[1, 1]
    phi = (np.angle(w[0, 0]) - np.angle(w[0, 1])) % TWO_PI
    f = 1j * np.exp(1j * theta / 2.0)
    d1 = w[0, 1] / (f * c)
    d2 = w[1, 1] / (-f * s)
    return theta, phi, d1, d2


def clements_decompose(u, tol=1e-8):
    """Decompose a unitary into a rectangular MZI mesh.

    Args:
        u: square unitary matrix (checked against tol).
        tol: allowed unitarity defect ||u u^H - I||_F.

    Returns:
        DecomposedUnitary whose reconstruction matches u to within
        roughly 1e-9 entrywise.  Phases are canonicalized to [0, 2 pi).

    Raises:
        ValueError: if u is not square or not unitary within tol.
    """
    u = as_cmatrix(u)
    n = u.shape[0]
    if u.shape[0] != u.shape[1]:
        raise ValueError(f"decomposition needs a square matrix, got {u.shape}")
    defect = np.linalg.norm(u @ u.conj().T - np.eye(n))
    if defect > tol:
        raise ValueError(
            f"input is not unitary: defect {defect:.3e} exceeds tolerance {tol:.1e}")
    if n < 2:
        raise ValueError("mesh size must be at least 2")

    v = u.astype(complex).copy()
    lefts = []   # chronological (top_wire, theta, phi)
    rights = []
    for c in range(n - 2, -1, -1):
        if c % 2 == n % 2:
            # Null subdiagonal c from the right, working up the diagonal.
            for j in range(n - 2 - c, -1, -1):
                i = c + j + 1
                theta, phi = _right_null_angles(v[i, j], v[i, j + 1])
                rights.append((j, theta, phi))
                _apply_right_dagger(v, j, theta, phi)
        else:
            for j in range(n - 1 - c):
                i = c + j + 1
                theta, phi = _left_null_angles(v[i - 1, j], v[i, j])
                lefts.append((i - 1, theta, phi))
                _apply_left(v, i - 1, theta, phi)

    d = np.diag(v).copy()
    # v should now be diagonal; the residual is the decomposition error.
    # Push each left factor's inverse through the diagonal, newest first:
    # U = L1^-1 ... Lp^-1 D R_q ... R_1  ->  U = D' T'_1 ... T'_p R_q ... R_1
    primed = [None] * len(lefts)
    for k in range(len(lefts) - 1, -1, -1):
        m, theta, phi = lefts[k]
        w = mzi_transfer(theta, phi).conj().T @ np.diag([d[m], d[m + 1]])
        theta2, phi2, d1, d2 = _factor_diag_times_t(w)
        d[m], d[m + 1] = d1, d2
        primed[k] = (m, theta2, phi2)

    # Order the factors as light traverses them: right factors in
    # chronological order, then the pushed-through left factors reversed.
    light_order = rights + primed[::-1]

    # Greedy earliest-column assignment reproduces the canonical layout.
    depth = [0] * n
    by_slot = {}
    for m, theta, phi in light_order:
        col = max(depth[m], depth[m + 1])
        by_slot[(col, m)] = (float(_canon_angle(theta)), float(_canon_angle(phi)))
        depth[m] = depth[m + 1] = col + 1

    placements = clements_layout(n)
    params = []
    for p in placements:
        if (p.column, p.top_wire) not in by_slot:
            raise RuntimeError(
                f"internal layout mismatch at column {p.column}, wire {p.top_wire}")
        theta, phi = by_slot[(p.column, p.top_wire)]
        params.append(MZIParams(theta=theta, phi=phi))
    return DecomposedUnitary(
        n=n,
        placements=placements,
        params=params,
        output_phases=_canon_angle(np.angle(d)),
    )


def params_array(d):
    """Nominal (K, 6) parameter array [theta, phi, r1, t1, r2, t2]."""
    out = np.empty((len(d.params), 6))
    for k, p in enumerate(d.params):
        out[k] = (p.theta, p.phi, p.r1, p.t1, p.r2, p.t2)
    return out


def _coerce_params(d, perturbed):
    if perturbed is None:
        return params_array(d)
    if isinstance(perturbed, np.ndarray):
        arr = perturbed
    else:
        arr = np.empty((len(perturbed), 6))
        for k, p in enumerate(perturbed):
            arr[k] = (p.theta, p.phi, p.r1, p.t1, p.r2, p.t2)
    if arr.shape != (len(d.placements), 6):
        raise ValueError(
            f"perturbed parameters misaligned: expected {(len(d.placements), 6)}, "
            f"got {arr.shape}")
    return arr


def _columns(d):
    """Placements grouped by mesh column, cached on the instance."""
    cache = getattr(d, "_column_cache", None)
    if cache is None:
        cols = {}
        for p in d.placements:
            cols.setdefault(p.column, []).append(p)
        cache = [(np.array([p.top_wire for p in cols[c]]),
                  np.array([p.mzi_id for p in cols[c]]))
                 for c in sorted(cols)]
        d._column_cache = cache
    return cache


def reconstruct(d, perturbed=None):
    """Transfer matrix of a mesh, optionally with perturbed parameters.

    Args:
        d: DecomposedUnitary.
        perturbed: optional parameter override, either a list of
            MZIParams aligned with d.placements or a (K, 6) array.

    Returns:
        The n x n complex transfer matrix (unitary for nominal and
        lossless perturbed parameters).
    """
    arr = _coerce_params(d, perturbed)
    return reconstruct_batch(d, arr[None, :, :])[0]


def reconstruct_batch(d, params_batch):
    """Vectorized reconstruction for a batch of parameter draws.

    Args:
        d: DecomposedUnitary.
        params_batch: (B, K, 6) array of per-draw parameters.

    Returns:
        (B, n, n) complex array of transfer matrices.
    """
    params_batch = np.asarray(params_batch, dtype=float)
    if params_batch.ndim != 3 or params_batch.shape[1:] != (len(d.placements), 6):
        raise ValueError(
            f"params batch must be (B, {len(d.placements)}, 6), got {params_batch.shape}")
    b = params_batch.shape[0]
    n = d.n
    u = np.broadcast_to(np.eye(n, dtype=complex), (b, n, n)).copy()
    for tops, ids in _columns(d):
        p = params_batch[:, ids, :]  # (B, k, 6)
        t11, t12, t21, t22 = mzi_entries_imperfect(
            p[..., 0], p[..., 1], p[..., 2], p[..., 3], p[..., 4], p[..., 5])
        factor = np.broadcast_to(np.eye(n, dtype=complex), (b, n, n)).copy()
        factor[:, tops, tops] = t11
        factor[:, tops, tops + 1] = t12
        factor[:, tops + 1, tops] = t21
        factor[:, tops + 1, tops + 1] = t22
        u = factor @ u
    u *= np.exp(1j * d.output_phases)[:, None]
    return u


def synthesize_diagonal(s, n_in, n_out):
    """Terminated-MZI parameters realizing a diagonal of singular values.

    The through-amplitude of a terminated MZI is |T11| = sin(theta/2),
    so theta_i = 2 arcsin(s_i / beta) with beta = max(s) (1 if all s are
    zero).  phi_i = -theta_i/2 - pi/2 (mod 2 pi) rotates T11 to the
    positive real axis, making the realized diagonal exactly s_i / beta.

    Returns:
        (sigma_thetas, sigma_phis, beta)

    Raises:
        ValueError: on negative singular values or length mismatch.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("singular values must be nonnegative")
    r = min(n_in, n_out)
    if s.shape != (r,):
        raise ValueError(f"expected {r} singular values, got {s.shape}")
    beta = float(np.max(s)) if s.size and np.max(s) > 0 else 1.0
    ratios = np.clip(s / beta, 0.0, 1.0)
    thetas = 2.0 * np.arcsin(ratios)
    phis = _canon_angle(-thetas / 2.0 - np.pi / 2.0)
    return thetas, phis, beta


def sigma_params_array(layer):
    """Nominal (n_sigma, 6) parameters of the diagonal-stage MZIs."""
    r = layer.n_sigma
    out = np.empty((r, 6))
    out[:, 0] = layer.sigma_thetas
    out[:, 1] = layer.sigma_phis
    out[:, 2:] = INV_SQRT2
    return out


def sigma_diag_values(layer, sigma_params=None):
    """Complex through-coefficients of the diagonal stage.

    With nominal parameters these are the real values s_i / beta; under
    perturbation they are the T11 entries of the imperfect MZIs.
    """
    if sigma_params is None:
        arr = sigma_params_array(layer)
    else:
        arr = np.asarray(sigma_params, dtype=float)
        if arr.shape != (layer.n_sigma, 6):
            raise ValueError(
                f"sigma parameters misaligned: expected {(layer.n_sigma, 6)}, "
                f"got {arr.shape}")
    t11, _, _, _ = mzi_entries_imperfect(
        arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], arr[:, 4], arr[:, 5])
    return t11


def layer_from_weights(m, sv_permutation=None):
    """Build the photonic realization of a weight matrix via its SVD.

    Args:
        m: (n_out, n_in) complex weight matrix.
        sv_permutation: optional permutation of the min(n_out, n_in)
            singular-value slots.  The SVD factors are reordered
            consistently, so the layer still realizes m exactly while
            the hardware diagonal holds the singular values in the
            permuted order.

    Returns:
        PhotonicLinearLayer.
    """
    m = as_cmatrix(m)
    n_out, n_in = m.shape
    u, s, vh = svd(m)
    r = min(n_out, n_in)
    if sv_permutation is not None:
        perm = np.asarray(sv_permutation, dtype=int)
        if sorted(perm.tolist()) != list(range(r)):
            raise ValueError(f"sv_permutation must permute 0..{r - 1}")
        u = u[:, np.concatenate([perm, np.arange(r, n_out)])]
        vh = vh[np.concatenate([perm, np.arange(r, n_in)]), :]
        s = s[perm]
    thetas, phis, beta = synthesize_diagonal(s, n_in, n_out)
    return PhotonicLinearLayer(
        u_mesh=clements_decompose(u),
        v_mesh=clements_decompose(vh),
        sigma_thetas=thetas,
        sigma_phis=phis,
        beta=beta,
        n_in=n_in,
        n_out=n_out,
    )


def layer_transfer(layer, perturbation=None):
    """Effective weight matrix realized by a (possibly perturbed) layer.

    Computes beta * U_mesh * Sigma * V_mesh with Sigma the rectangular
    n_out x n_in diagonal of the terminated-MZI through-coefficients.
    A LayerPerturbation can override any of the three stages; parts left
    None evaluate at their nominal parameters.
    """
    if perturbation is None:
        perturbation = LayerPerturbation()
    u_mat = reconstruct(layer.u_mesh, perturbation.u)
    v_mat = reconstruct(layer.v_mesh, perturbation.v)
    diag = sigma_diag_values(layer, perturbation.sigma)
    r = layer.n_sigma
    # Sigma is rectangular: crop or zero-pad between the two mesh sizes.
    scaled = (u_mat[:, :r] * diag) @ v_mat[:r, :]
    return layer.beta * scaled


def mesh_to_dict(d):
    """JSON-ready dict for a mesh (schema: n, placements, phases)."""
    return {
        "n": d.n,
        "placements": [
            {"col": p.column, "top": p.top_wire, "id": p.mzi_id}
            for p in d.placements
        ],
        "thetas": [p.theta for p in d.params],
        "phis": [p.phi for p in d.params],
        "output_phases": d.output_phases.tolist(),
    }


def mesh_from_dict(doc):
    try:
        n = doc["n"]
        placements = [
            MZIPlacement(column=e["col"], top_wire=e["top"], mzi_id=e["id"])
            for e in doc["placements"]
        ]
        params = [
            MZIParams(theta=t, phi=p)
            for t, p in zip(doc["thetas"], doc["phis"], strict=True)
        ]
        output_phases = np.asarray(doc["output_phases"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed mesh document: {exc}") from exc
    return DecomposedUnitary(n=n, placements=placements, params=params,
                             output_phases=output_phases)


def layer_to_dict(layer):
    return {
        "n_in": layer.n_in,
        "n_out": layer.n_out,
        "beta": layer.beta,
        "sigma_thetas": layer.sigma_thetas.tolist(),
        "sigma_phis": layer.sigma_phis.tolist(),
        "u_mesh": mesh_to_dict(layer.u_mesh),
        "v_mesh": mesh_to_dict(layer.v_mesh),
    }


def layer_from_dict(doc):
    try:
        return PhotonicLinearLayer(
            u_mesh=mesh_from_dict(doc["u_mesh"]),
            v_mesh=mesh_from_dict(doc["v_mesh"]),
            sigma_thetas=np.asarray(doc["sigma_thetas"], dtype=float),
            sigma_phis=np.asarray(doc["sigma_phis"], dtype=float),
            beta=doc["beta"],
            n_in=doc["n_in"],
            n_out=doc["n_out"],
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed layer document: {exc}") from exc
