"""Dense complex linear algebra for small photonic problems (n <= 32).

Complex matrices and vectors are plain numpy arrays with dtype complex128:
a CMatrix is a 2-D array (row-major), a CVector is a 1-D array.  Entries
must stay finite; the validating constructors below are used at the API
boundaries so NaN/Inf never enters a mesh or a network.
"""

import numpy as np

__all__ = [
    "as_cmatrix",
    "as_cvector",
    "matmul",
    "dagger",
    "is_unitary",
    "svd",
    "rvd",
    "haar_random_unitary",
]


def as_cmatrix(data):
    """Validate and convert to a complex 2-D array.

    Raises ValueError if the input is not 2-D or contains NaN/Inf.
    """
    a = np.asarray(data, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    return a


def as_cvector(data):
    """Validate and convert to a complex 1-D array."""
    v = np.asarray(data, dtype=complex)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got ndim={v.ndim}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector contains non-finite entries")
    return v


def matmul(a, b):
    """Complex matrix product a @ b with an explicit dimension check."""
    a = as_cmatrix(a)
    b = as_cmatrix(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} @ {b.shape}")
    return a @ b


def dagger(a):
    """Hermitian transpose (conjugate transpose)."""
    return as_cmatrix(a).conj().T


def is_unitary(a, tol=1e-10):
    """True iff ||a a^H - I||_F <= tol.  Raises on non-square input."""
    a = as_cmatrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"is_unitary needs a square matrix, got {a.shape}")
    defect = a @ a.conj().T - np.eye(a.shape[0])
    return bool(np.linalg.norm(defect) <= tol)


def svd(m):
    """Singular value decomposition m = U diag(s) Vh.

    Returns:
        (U, s, Vh) with U (rows x rows) and Vh (cols x cols) unitary,
        s a real 1-D array sorted descending, length min(rows, cols).
    """
    m = as_cmatrix(m)
    if m.size == 0:
        raise ValueError("svd of an empty matrix")
    u, s, vh = np.linalg.svd(m, full_matrices=True)
    return u, s, vh


def rvd(u, u_ref):
    """Relative-variation distance between a realized and an intended matrix.

    Defined as the ratio of sums sum|u - u_ref| / sum|u_ref| over all
    entries, which stays well defined when u_ref has zero entries.

    Raises ValueError on shape mismatch or an all-zero reference.
    """
    u = as_cmatrix(u)
    u_ref = as_cmatrix(u_ref)
    if u.shape != u_ref.shape:
        raise ValueError(f"shape mismatch: {u.shape} vs {u_ref.shape}")
    denom = np.sum(np.abs(u_ref))
    if denom == 0.0:
        raise ValueError("rvd undefined for an all-zero reference matrix")
    return float(np.sum(np.abs(u - u_ref)) / denom)


def haar_random_unitary(n, rng):
    """Haar-distributed n x n unitary from a QR-orthonormalized complex Gaussian.

    The R-diagonal phase correction makes the distribution exactly Haar
    rather than merely unitary.
    """
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
