"""Transmit covariance matrices: one-ring construction and eigendecomposition."""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from ..errors import InvalidInputError, NumericalIntegrationError

# Gauss-Legendre orders tried in turn; successive orders must agree to QUAD_TOL.
QUAD_ORDERS = (64, 128, 256, 512, 1024, 2048, 4096)
QUAD_TOL = 1e-9
MIN_SPREAD = 1e-9

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-8
TRACE_TOL = 1e-8
ORTHO_TOL = 1e-8


@dataclass(frozen=True)
class OneRingParams:
    """Geometry of a user surrounded by a ring of scatterers.

    Parameters
    ----------
    theta : float
        Azimuth angle of departure in radians, within [-pi/2, pi/2].
    delta : float
        Angular spread in radians, within (0, pi/2].
    spacing : float
        Antenna spacing in wavelengths.
    num_antennas : int
        Number of ULA elements M.
    """

    theta: float
    delta: float
    spacing: float = 0.5
    num_antennas: int = 8

    def __post_init__(self):
        if not -np.pi / 2 - 1e-12 <= self.theta <= np.pi / 2 + 1e-12:
            raise InvalidInputError(f"theta={self.theta} outside [-pi/2, pi/2]")
        if not 0 < self.delta <= np.pi / 2 + 1e-12:
            raise InvalidInputError(f"delta={self.delta} outside (0, pi/2]")
        if self.spacing <= 0:
            raise InvalidInputError("spacing must be positive")
        if int(self.num_antennas) != self.num_antennas or self.num_antennas < 1:
            raise InvalidInputError("num_antennas must be a positive integer")

    @classmethod
    def from_degrees(cls, theta_deg, delta_deg, spacing=0.5, num_antennas=8):
        return cls(np.deg2rad(theta_deg), np.deg2rad(delta_deg), spacing, num_antennas)


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Hermitian PSD transmit covariance, validated on construction."""

    entries: np.ndarray
    trace_normalized: bool = True

    def __post_init__(self):
        R = np.asarray(self.entries, dtype=complex)
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise InvalidInputError(f"covariance must be square, got shape {R.shape}")
        scale = max(1.0, float(np.max(np.abs(R))))
        if np.max(np.abs(R - R.conj().T)) > HERMITIAN_TOL * scale:
            raise InvalidInputError("covariance is not Hermitian")
        ev = np.linalg.eigvalsh(R)
        if ev[0] < -PSD_TOL * max(ev[-1], 0.0):
            raise InvalidInputError(f"covariance is not PSD (min eigenvalue {ev[0]:.3g})")
        M = R.shape[0]
        if self.trace_normalized and abs(np.trace(R).real - M) > TRACE_TOL * M:
            raise InvalidInputError(f"trace {np.trace(R).real} != M = {M}")
        object.__setattr__(self, "entries", R)

    @property
    def M(self):
        return self.entries.shape[0]

    def sqrt(self):
        """Hermitian PSD square root."""
        return psd_sqrt(self.entries)


def psd_sqrt(R):
    """Square root of one Hermitian PSD matrix or a stack of them."""
    lam, V = np.linalg.eigh(R)
    lam = np.sqrt(np.clip(lam, 0.0, None))
    return (V * lam[..., None, :]) @ np.swapaxes(V.conj(), -1, -2)


def _lags_at_order(lags, theta, delta, spacing, order):
    x, w = np.polynomial.legendre.leggauss(order)
    # theta, delta: shape (U,); result (U, len(lags))
    phase = np.sin(np.multiply.outer(delta, x) + theta[:, None])
    arg = 2j * np.pi * spacing * lags[None, :, None] * phase[:, None, :]
    return 0.5 * np.exp(arg) @ w


def one_ring_lags(num_antennas, theta, delta, spacing=0.5):
    """Correlation coefficients ``r_n = [R]_{p, p-n}`` for ``n = 0..M-1``.

    ``theta`` and ``delta`` may be scalars or equal-length arrays (one row of
    lags per user). Orders escalate through ``QUAD_ORDERS`` until two
    successive rules agree to ``QUAD_TOL``.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    delta = np.atleast_1d(np.asarray(delta, dtype=float))
    theta, delta = np.broadcast_arrays(theta, delta)
    lags = np.arange(num_antennas, dtype=float)
    out = np.empty((theta.size, num_antennas), dtype=complex)

    tiny = delta < MIN_SPREAD
    if np.any(tiny):
        out[tiny] = np.exp(2j * np.pi * spacing * np.outer(np.sin(theta[tiny]), lags))

    live = ~tiny
    if np.any(live):
        th, de = theta[live], delta[live]
        prev = _lags_at_order(lags, th, de, spacing, QUAD_ORDERS[0])
        for order in QUAD_ORDERS[1:]:
            cur = _lags_at_order(lags, th, de, spacing, order)
            if np.max(np.abs(cur - prev)) <= QUAD_TOL:
                break
            prev = cur
        else:
            raise NumericalIntegrationError(
                f"one-ring quadrature did not settle at {QUAD_ORDERS[-1]} nodes"
            )
        out[live] = cur
    out[:, 0] = 1.0
    return out


def one_ring_covariance(params):
    """Toeplitz covariance of the one-ring model for a half-open ring of scatterers.

    Entry ``(p, q)`` is the average of ``exp(j 2 pi D (p - q) sin(w + theta))``
    over ``w`` uniform on ``[-delta, delta]``. The diagonal is exactly one, so
    the trace equals M.
    """
    r = one_ring_lags(params.num_antennas, params.theta, params.delta, params.spacing)[0]
    return CovarianceMatrix(toeplitz(r, r.conj()), trace_normalized=True)


def one_ring_covariance_batch(num_antennas, theta, delta, spacing=0.5):
    """Stack of one-ring covariances, shape ``(U, M, M)``; skips validation."""
    r = one_ring_lags(num_antennas, theta, delta, spacing)
    n = np.arange(num_antennas)
    diff = n[:, None] - n[None, :]
    R = r[:, np.abs(diff)]
    return np.where(diff >= 0, R, R.conj())


@dataclass(frozen=True, eq=False)
class GroupEigenStructure:
    """Tall unitary eigenbasis and positive eigenvalues of one group covariance."""

    basis: np.ndarray
    eigenvalues: np.ndarray

    def __post_init__(self):
        U = np.asarray(self.basis, dtype=complex)
        lam = np.asarray(self.eigenvalues, dtype=float)
        if U.ndim != 2 or lam.ndim != 1 or U.shape[1] != lam.size:
            raise InvalidInputError("basis must be M x r with r eigenvalues")
        if np.any(lam <= 0):
            raise InvalidInputError("eigenvalues must be strictly positive")
        if np.any(np.diff(lam) > 1e-12 * lam[0]):
            raise InvalidInputError("eigenvalues must be nonincreasing")
        if np.max(np.abs(U.conj().T @ U - np.eye(lam.size))) > ORTHO_TOL:
            raise InvalidInputError("basis columns are not orthonormal")
        object.__setattr__(self, "basis", U)
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def M(self):
        return self.basis.shape[0]

    @property
    def rank(self):
        return self.eigenvalues.size

    def covariance(self):
        """Reconstruct ``U diag(lambda) U^H``."""
        return (self.basis * self.eigenvalues) @ self.basis.conj().T


def eigen_decompose(cov, rank_threshold=1e-4):
    """Keep the eigenpairs with eigenvalue >= ``rank_threshold * lambda_max``.

    The number of retained pairs is the effective rank r.
    """
    R = cov.entries if isinstance(cov, CovarianceMatrix) else np.asarray(cov, dtype=complex)
    if not 0 < rank_threshold < 1:
        raise InvalidInputError("rank_threshold must lie in (0, 1)")
    scale = max(1.0, float(np.max(np.abs(R))))
    if np.max(np.abs(R - R.conj().T)) > HERMITIAN_TOL * scale:
        raise InvalidInputError("covariance is not Hermitian")
    lam, V = np.linalg.eigh(R)
    lam, V = lam[::-1], V[:, ::-1]
    keep = lam >= rank_threshold * lam[0]
    return GroupEigenStructure(V[:, keep], lam[keep])
