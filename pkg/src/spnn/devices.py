"""Closed-form transfer matrices for the photonic primitives.

A Mach-Zehnder interferometer (MZI) is two 50:50 beam splitters with a
phase shifter of angle theta between them and one of angle phi on the
upper input arm.  With the phase shifters acting on the upper arm only,
the ideal transfer matrix is

    T(theta, phi) = B . P(theta) . B . P(phi)
                  = 1/2 [[e^{i phi}(e^{i theta} - 1),          i(e^{i theta} + 1)],
                         [i e^{i phi}(e^{i theta} + 1),        -(e^{i theta} - 1)]]

where B = (1/sqrt 2)[[1, i],[i, 1]] and P(x) = diag(e^{ix}, 1).  The
imperfect variant replaces the two splitters by amplitude coefficients
(r1, t1) and (r2, t2).  A first-order deviation model propagates small
phase errors (d_theta, d_phi) through the partial derivatives of T.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MZIParams",
    "ThermoOpticParams",
    "INV_SQRT2",
    "DEFAULT_DN_DT",
    "DEFAULT_LAMBDA0",
    "phs_matrix",
    "bes_matrix",
    "mzi_transfer",
    "mzi_transfer_imperfect",
    "mzi_entries_imperfect",
    "mzi_deviation_first_order",
    "mzi_deviation_common_k",
    "phase_from_temperature",
]

INV_SQRT2 = 1.0 / np.sqrt(2.0)

# Thermo-optic defaults for silicon waveguides around the C band.
DEFAULT_DN_DT = 1.8e-4  # 1/K
DEFAULT_LAMBDA0 = 1550e-9  # m


@dataclass(frozen=True)
class MZIParams:
    """Tunable phases and splitter amplitudes of one MZI.

    (r1, t1) is the input-side splitter, (r2, t2) the output-side one.
    The ideal device has all four amplitudes at 1/sqrt(2).
    """

    theta: float
    phi: float
    r1: float = INV_SQRT2
    t1: float = INV_SQRT2
    r2: float = INV_SQRT2
    t2: float = INV_SQRT2

    def __post_init__(self):
        for name in ("r1", "t1", "r2", "t2"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"splitter amplitude {name}={val} outside [0, 1]")
        if not (np.isfinite(self.theta) and np.isfinite(self.phi)):
            raise ValueError("non-finite phase")

    def is_lossless(self, tol=1e-12):
        return (abs(self.r1**2 + self.t1**2 - 1.0) <= tol
                and abs(self.r2**2 + self.t2**2 - 1.0) <= tol)


@dataclass(frozen=True)
class ThermoOpticParams:
    """Inputs of the thermo-optic phase relation for one heater."""

    length_l: float
    delta_T: float
    lambda0: float = DEFAULT_LAMBDA0
    dn_dT: float = DEFAULT_DN_DT

    def __post_init__(self):
        if self.length_l <= 0:
            raise ValueError("heater length must be positive")
        if self.lambda0 <= 0:
            raise ValueError("wavelength must be positive")


def phs_matrix(angle):
    """Phase shifter on the upper arm: diag(e^{i angle}, 1)."""
    return np.array([[np.exp(1j * angle), 0.0], [0.0, 1.0]])


def bes_matrix(r, t):
    """Symmetric beam splitter [[r, it],[it, r]].

    The cross path picks up the pi/2 phase of the i factor.  The 50:50
    device has r = t = 1/sqrt(2).
    """
    if not (0.0 <= r <= 1.0 and 0.0 <= t <= 1.0):
        raise ValueError(f"splitter amplitudes (r={r}, t={t}) outside [0, 1]")
    return np.array([[r, 1j * t], [1j * t, r]])


def mzi_transfer(theta, phi):
    """Ideal MZI transfer matrix, closed form of B P(theta) B P(phi)."""
    et = np.exp(1j * theta)
    ep = np.exp(1j * phi)
    return 0.5 * np.array([
        [ep * (et - 1.0), 1j * (et + 1.0)],
        [1j * ep * (et + 1.0), -(et - 1.0)],
    ])


def mzi_entries_imperfect(theta, phi, r1, t1, r2, t2):
    """Entries of the imperfect-splitter MZI; accepts scalars or arrays.

    Returns:
        (t11, t12, t21, t22) broadcast over the inputs.
    """
    et = np.exp(1j * np.asarray(theta))
    ep = np.exp(1j * np.asarray(phi))
    t11 = r1 * r2 * et * ep - t1 * t2 * ep
    t12 = 1j * (r2 * t1 * et + t2 * r1)
    t21 = 1j * (t2 * r1 * et * ep + t1 * r2 * ep)
    t22 = -t1 * t2 * et + r1 * r2
    return t11, t12, t21, t22


def mzi_transfer_imperfect(p):
    """Transfer matrix of an MZI with non-ideal splitters.

    Evaluates B2 P(theta) B1 P(phi) with B_k = [[r_k, i t_k],[i t_k, r_k]].
    Reduces to mzi_transfer when all amplitudes are 1/sqrt(2).
    """
    t11, t12, t21, t22 = mzi_entries_imperfect(
        p.theta, p.phi, p.r1, p.t1, p.r2, p.t2)
    return np.array([[t11, t12], [t21, t22]])


def mzi_deviation_first_order(theta, phi, d_theta, d_phi):
    """First-order deviation dT/dtheta * d_theta + dT/dphi * d_phi.

    The partial derivatives of the ideal transfer matrix are

        dT/dtheta = 1/2 [[ i e^{i(theta+phi)},  -e^{i theta}],
                         [  -e^{i(theta+phi)}, -i e^{i theta}]]
        dT/dphi   = 1/2 [[ i e^{i phi}(e^{i theta} - 1),  0],
                         [  -e^{i phi}(e^{i theta} + 1),  0]]

    Note the right column of dT/dphi vanishes: T12 and T22 do not
    depend on phi.
    """
    et = np.exp(1j * theta)
    ep = np.exp(1j * phi)
    d_dtheta = 0.5 * np.array([
        [1j * et * ep, -et],
        [-et * ep, -1j * et],
    ])
    d_dphi = 0.5 * np.array([
        [1j * ep * (et - 1.0), 0.0],
        [-ep * (et + 1.0), 0.0],
    ])
    return d_dtheta * d_theta + d_dphi * d_phi


def mzi_deviation_common_k(theta, phi, k):
    """Deviation under a common relative error K on both phases.

    Equals mzi_deviation_first_order(theta, phi, k*theta, k*phi).  For
    the through port the relative deviation |dT22|/|T22| simplifies to
    k*theta / (2 sin(theta/2)), strictly increasing on (0, 2 pi); the
    cross-port ratio |dT12|/|T12| is k*theta / (2 cos(theta/2)),
    strictly increasing on (0, pi).
    """
    return mzi_deviation_first_order(theta, phi, k * theta, k * phi)


def phase_from_temperature(p):
    """Thermo-optic phase shift (2 pi l / lambda0) (dn/dT) dT in radians."""
    return (2.0 * np.pi * p.length_l / p.lambda0) * p.dn_dT * p.delta_T
