"""Limiting eigenvalue spectra of Toeplitz covariances and their log-det rate."""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from ..errors import DegenerateSpectrumError, NumericalIntegrationError

_EDGE = 1e-12


@dataclass(frozen=True, eq=False)
class EigenvalueSpectrum:
    """Spectral density ``S(xi)`` on ``[-1/2, 1/2]``.

    Attributes
    ----------
    evaluator : callable
        Vectorized map from ``xi`` to ``S(xi) >= 0``.
    support : tuple of (float, float)
        Disjoint sorted intervals where ``S > 0``.
    breakpoints : tuple of float
        Points where ``S`` is singular or changes its piecewise form;
        quadrature splits there.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    support: tuple
    breakpoints: tuple = field(default=())

    @property
    def support_measure(self):
        return float(sum(b - a for a, b in self.support))

    def __call__(self, xi):
        return self.evaluator(np.asarray(xi, dtype=float))

    def pieces(self):
        """Sub-intervals of the support free of interior breakpoints."""
        pts = sorted(set(self.breakpoints))
        out = []
        for a, b in self.support:
            cuts = [a] + [p for p in pts if a + _EDGE < p < b - _EDGE] + [b]
            out.extend(zip(cuts[:-1], cuts[1:]))
        return out


def flat_spectrum(level=1.0, support=((-0.5, 0.5),)):
    """Constant density ``level`` on the given intervals."""
    support = tuple((float(a), float(b)) for a, b in support)

    def evaluate(xi):
        inside = np.zeros(np.shape(xi), dtype=bool)
        for a, b in support:
            inside |= (xi >= a) & (xi <= b)
        return np.where(inside, float(level), 0.0)

    return EigenvalueSpectrum(evaluate, support)


def _merge(intervals):
    out = []
    for a, b in sorted(intervals):
        if b - a <= 0:
            continue
        if out and a <= out[-1][1] + _EDGE:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return tuple((float(a), float(b)) for a, b in out)


def one_ring_spectrum(params):
    """Spectral density of the one-ring covariance sequence.

    ``S(xi) = sum_k f(k - xi)`` where ``f`` is the density of ``D sin(phi)``
    with ``phi`` uniform on ``[theta - delta, theta + delta]``. Each angle
    mapping to ``u`` contributes ``1 / (2 delta sqrt(D^2 - u^2))``. Without
    folding of the angle range around ``+-pi/2`` this is one term per ``k``.
    """
    D, theta, delta = params.spacing, params.theta, params.delta
    lo_ang, hi_ang = theta - delta, theta + delta

    def angle_count(u):
        # preimages of u = D sin(phi) inside [lo_ang, hi_ang] (a subset of [-pi, pi])
        a = np.arcsin(np.clip(u / D, -1.0, 1.0))
        count = np.zeros(np.shape(u))
        for phi in (a, np.pi - a, -np.pi - a):
            count += (phi >= lo_ang) & (phi <= hi_ang)
        # pi - a and -pi - a coincide with a at u = +-D; those are measure zero
        return count

    kmax = int(np.ceil(D + 0.5)) + 1
    ks = np.arange(-kmax, kmax + 1)

    def evaluate(xi):
        xi = np.asarray(xi, dtype=float)
        u = ks.reshape((-1,) + (1,) * xi.ndim) - xi
        inside = np.abs(u) < D
        root = np.sqrt(np.where(inside, D * D - u * u, 1.0))
        dens = np.where(inside, angle_count(u) / (2 * delta * root), 0.0)
        return dens.sum(axis=0)

    grid = np.linspace(lo_ang, hi_ang, 4097)
    sin_vals = D * np.sin(grid)
    u_lo, u_hi = float(D * min(np.sin(lo_ang), np.sin(hi_ang))), float(
        D * max(np.sin(lo_ang), np.sin(hi_ang))
    )
    u_turns = []
    if lo_ang <= np.pi / 2 <= hi_ang:
        u_hi = D
        u_turns.append(D)
    if lo_ang <= -np.pi / 2 <= hi_ang:
        u_lo = -D
        u_turns.append(-D)
    u_lo, u_hi = min(u_lo, sin_vals.min()), max(u_hi, sin_vals.max())

    support, breaks = [], [-0.5, 0.5]
    u_marks = [u_lo, u_hi, D * np.sin(lo_ang), D * np.sin(hi_ang), *u_turns]
    for k in ks:
        a, b = max(k - u_hi, -0.5), min(k - u_lo, 0.5)
        if b > a:
            support.append((a, b))
        breaks.extend(k - u for u in u_marks if -0.5 < k - u < 0.5)
    return EigenvalueSpectrum(evaluate, _merge(support), tuple(float(x) for x in sorted(breaks)))


def _piece_integral(func, a, b):
    # xi = a + (b - a)(1 - cos t)/2 clusters nodes at both ends and cancels
    # inverse-square-root endpoint singularities.
    half = 0.5 * (b - a)

    def integrand(t):
        return func(a + half * (1.0 - np.cos(t))) * half * np.sin(t)

    val, err = integrate.quad(integrand, 0.0, np.pi, limit=200, epsabs=1e-11, epsrel=1e-10)
    if not np.isfinite(val) or err > 1e-6 * max(1.0, abs(val)):
        raise NumericalIntegrationError(f"quadrature error {err:.3g} on [{a}, {b}]")
    return val


def spectrum_mass(spectrum):
    """``int S(xi) dxi`` over the band; equals one for a unit-diagonal covariance."""
    f = lambda x: float(spectrum(x))
    return sum(_piece_integral(f, a, b) for a, b in spectrum.pieces())


def szego_logdet_rate(spectrum, normalized=False):
    """Integral of ``log2 S(xi)`` over the support of ``S``.

    For a full-band spectrum this is the limit of ``(1/M) log2 det R_M``.
    With ``normalized=True`` the integral is divided by the support
    measure, i.e. the mean of ``log2 S`` over the support.

    Raises
    ------
    DegenerateSpectrumError
        If the support is empty.
    """
    rho = spectrum.support_measure
    if rho <= 0:
        raise DegenerateSpectrumError("spectrum has empty support")

    def f(x):
        s = float(spectrum(x))
        return np.log2(s) if s > 0 else 0.0

    total = sum(_piece_integral(f, a, b) for a, b in spectrum.pieces())
    return total / rho if normalized else total
