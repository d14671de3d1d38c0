"""Closed-form high-SNR, large-K, and large-system capacity expressions.

All rates are in bits (log base 2). Every expression drops its vanishing
``o(1)`` term; results carry a regime tag so values from different
asymptotic regimes are not compared by accident.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, FitError, InvalidInputError

EULER_GAMMA = 0.57721566490153286061
LOG2E = 1.0 / math.log(2.0)
# Power offsets are quoted in dB: one bit of log2 P is 10 log10 2 dB.
DB_PER_BIT = 10.0 * math.log10(2.0)

_harmonic_table = [0.0]
_harmonic_state = [0.0, 0.0]  # Neumaier running sum and compensation


def harmonic(n):
    """Harmonic number ``H_n = sum_{l=1}^n 1/l`` with ``H_0 = 0``.

    Values come from a cached compensated running sum, so every entry is
    accurate to about one ulp.
    """
    n = int(n)
    if n < 0:
        raise DomainError("harmonic number needs n >= 0")
    if n >= len(_harmonic_table):
        s, c = _harmonic_state
        for l in range(len(_harmonic_table), n + 1):
            x = 1.0 / l
            t = s + x
            c += (s - t) + x if abs(s) >= x else (x - t) + s
            s = t
            _harmonic_table.append(s + c)
        _harmonic_state[:] = [s, c]
    return _harmonic_table[n]


def harmonic_range(a, b):
    """``sum_{l=a}^{b} 1/l``; zero when ``b < a``."""
    if b < a:
        return 0.0
    if a < 1:
        raise DomainError("harmonic range must start at l >= 1")
    return harmonic(b) - harmonic(a - 1)


def harmonic_psi(n):
    """Digamma at a positive integer: ``psi(n) = -gamma + H_{n-1}`` (nats)."""
    if int(n) != n or n < 1:
        raise DomainError(f"psi needs a positive integer, got {n}")
    return -EULER_GAMMA + harmonic(int(n) - 1)


def harmonic_asymptotic(n):
    """Truncated expansion ``gamma + ln n + 1/(2n) - 1/(12n^2) + 1/(120n^4)`` of ``H_n``."""
    return EULER_GAMMA + math.log(n) + 1 / (2 * n) - 1 / (12 * n**2) + 1 / (120 * n**4)


def kappa(x, y, G=1):
    """Wishart offset ``kappa(x, y)`` in bits, scaled by the group count ``G``.

    ``yG (-gamma + sum_{l=2}^x 1/l + (x-y)/y sum_{l=x-y+1}^x 1/l) log2 e``,
    which equals ``G log2 e E[ln det W W^H]`` for a ``y x x`` standard
    complex Gaussian ``W``.
    """
    if int(x) != x or int(y) != y or y < 1:
        raise DomainError("kappa needs integers 1 <= y <= x")
    if y > x:
        raise DomainError(f"kappa needs y <= x, got x={x}, y={y}")
    inner = -EULER_GAMMA + (harmonic(x) - 1.0) + (x - y) / y * harmonic_range(x - y + 1, x)
    return y * G * inner * LOG2E


def wishart_logdet_mean(m, n):
    """``E[ln det W W^H]`` for ``W`` an ``m x n`` standard complex Gaussian, ``n >= m``."""
    if int(m) != m or int(n) != n or m < 1:
        raise DomainError("wishart_logdet_mean needs integers n >= m >= 1")
    if n < m:
        raise DomainError(f"need n >= m, got m={m}, n={n}")
    return math.fsum(harmonic_psi(n - l) for l in range(m))


@dataclass(frozen=True)
class BoundPair:
    """Lower and upper asymptotic values around a reference ``center``."""

    lower: float
    upper: float
    center: float
    meta: str
    flags: tuple = field(default=())

    def __post_init__(self):
        if self.lower > self.upper + 1e-9:
            raise InvalidInputError(f"lower {self.lower} exceeds upper {self.upper}")

    @property
    def width(self):
        return self.upper - self.lower


@dataclass(frozen=True)
class AffineApprox:
    """``C(P) ~ s_infinity (log2 P - l_infinity)``."""

    s_infinity: float
    l_infinity: float

    def __call__(self, snr_db):
        return self.s_infinity * (np.asarray(snr_db) / DB_PER_BIT - self.l_infinity)


@dataclass(frozen=True, eq=False)
class EigenvalueProfile:
    """Nonzero covariance eigenvalues per group, shape ``(G, r)``, rows nonincreasing."""

    values: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.values, dtype=float))
        if v.ndim != 2 or v.size == 0:
            raise InvalidInputError("profile must be a (G, r) array")
        if np.any(v <= 0):
            raise InvalidInputError("eigenvalues must be positive")
        object.__setattr__(self, "values", -np.sort(-v, axis=1))

    @classmethod
    def flat(cls, G, r, M=None):
        """Every eigenvalue equal to ``M / r`` (``G`` when ``M = rG``)."""
        M = r * G if M is None else M
        return cls(np.full((G, r), M / r))

    @classmethod
    def from_ensemble(cls, ensemble):
        return cls(ensemble.eigenvalues())

    @property
    def G(self):
        return self.values.shape[0]

    @property
    def r(self):
        return self.values.shape[1]

    @property
    def lam_min(self):
        return float(self.values.min())

    @property
    def lam_max(self):
        return float(self.values.max())

    @property
    def epsilon(self):
        return self.lam_min / self.lam_max

    def group_logdets(self):
        """``log2 det Lambda_g`` for every group."""
        return np.log2(self.values).sum(axis=1)

    def logdet_sum(self):
        return math.fsum(self.group_logdets())


def _check_profile(geometry, profile):
    if profile.G != geometry.G or profile.r != geometry.r:
        raise DomainError(
            f"profile (G={profile.G}, r={profile.r}) does not match geometry "
            f"(G={geometry.G}, r={geometry.r})"
        )


def highsnr_bounds(geometry, profile, P):
    """High-SNR sandwich on the sum capacity for the unitary structure.

    For ``r < K'`` the reference is
    ``n log2(P/n) + sum_g log2 det Lambda_g + kappa(K', r)`` with ``n = rG``;
    it is the upper value and the lower value subtracts ``n log2(K'/r)``.

    For ``r >= K'`` the reference is ``K log2(P c/K) + kappa(r, K')``, where
    ``c = M/r`` is the flat eigenvalue level (``c = G`` when ``M = rG``, so
    the first term is ``K log2(P/K')``). It is the upper value and the lower
    value adds ``sum_g sum_{i<=K'} log2(lambda_{g, r-i+1} / c)`` over the
    ``K'`` smallest eigenvalues.
    """
    _check_profile(geometry, profile)
    if P <= 0:
        raise DomainError("P must be positive")
    G, r, Kp, K = geometry.G, geometry.r, geometry.K_prime, geometry.K
    if r < Kp:
        n = r * G
        center = n * math.log2(P / n) + profile.logdet_sum() + kappa(Kp, r, G)
        return BoundPair(center + n * math.log2(r / Kp), center, center, "r_lt_Kprime")
    level = geometry.M / r
    center = K * math.log2(P * level / K) + kappa(r, Kp, G)
    offset = float(np.log2(profile.values[:, r - Kp:] / level).sum())
    return BoundPair(center + offset, center, center, "r_ge_Kprime")


def iid_highsnr(M, K, P):
    """High-SNR sum capacity of i.i.d. Rayleigh fading, ``K log2(P/K) + kappa(M, K)``."""
    if M < K:
        raise DomainError(f"needs M >= K, got M={M}, K={K}")
    return K * math.log2(P / K) + kappa(M, K, 1)


def affine_fit(curve, tail_fraction=1 / 3, min_points=3):
    """Fit ``C = S (log2 P - L)`` to the high-SNR tail of a capacity curve.

    Parameters
    ----------
    curve : sequence of (snr_db, bits)
    tail_fraction : float
        Fraction of the highest-SNR points used in the fit.
    min_points : int
        Lower limit on the number of tail points.

    Returns
    -------
    AffineApprox
        Slope ``S`` in bits per doubling of ``P`` and offset ``L`` in
        units of ``log2 P`` (about 3 dB).
    """
    pts = sorted((float(s), float(c)) for s, c in curve)
    if len(pts) < min_points:
        raise FitError(f"need at least {min_points} points, got {len(pts)}")
    n = max(min_points, math.ceil(tail_fraction * len(pts)))
    tail = np.array(pts[-n:])
    x = tail[:, 0] / DB_PER_BIT
    slope, intercept = np.polyfit(x, tail[:, 1], 1)
    if not slope > 0:
        raise FitError(f"non-positive high-SNR slope {slope:.3g}")
    return AffineApprox(float(slope), float(-intercept / slope))


def offset_decomposition(geometry, profile):
    """Power-offset change relative to i.i.d. fading, split into two terms, in dB.

    Returns
    -------
    gain : float
        ``(c/K) sum_g sum_{i<=K'} log2 lambda_{g,i}`` over the largest
        eigenvalues, ``c = 10 log10 2``.
    loss : float
        ``(c/K) (kappa(r, K') - kappa(M, K))``; never positive.
    """
    _check_profile(geometry, profile)
    G, r, Kp, K, M = geometry.G, geometry.r, geometry.K_prime, geometry.K, geometry.M
    if r < Kp:
        raise DomainError("offset decomposition needs r >= K'")
    if M < K:
        raise DomainError("offset decomposition needs M >= K")
    gain = DB_PER_BIT / K * float(np.log2(profile.values[:, :Kp]).sum())
    loss = DB_PER_BIT / K * (kappa(r, Kp, G) - kappa(M, K, 1))
    return gain, loss


def marginal_gain_bound(M, G):
    """Expansion-based cap on the net offset gain for ``r = K'`` flat profiles, in dB.

    Returns the truncated expansion ``c((G-1)/(2M) - (G^2-1)/(12M^2)) log2 e``
    and the simpler cap ``c log2 e / (2r)`` with ``r = M/G``.
    """
    r = M / G
    middle = DB_PER_BIT * ((G - 1) / (2 * M) - (G**2 - 1) / (12 * M**2)) * LOG2E
    return middle, DB_PER_BIT * LOG2E / (2 * r)


def largeK_capacity(geometry, profile, P, K=None):
    """Large-``K`` sum capacity ``M log2(P/M) + M log2 ln K + sum_g log2 det Lambda_g``.

    The multiuser-diversity term uses the natural log inside, since the
    maximum of ``K`` unit exponentials grows like ``ln K``.
    """
    _check_profile(geometry, profile)
    K = geometry.K if K is None else K
    if K < 2:
        raise DomainError("large-K expression needs K >= 2")
    if geometry.r >= geometry.K_prime:
        raise DomainError("large-K expression needs r < K'")
    M = geometry.M
    return M * math.log2(P / M) + M * math.log2(math.log(K)) + profile.logdet_sum()


def intra_group_coop_capacity(geometry, profile, P, K_prime=None):
    """Sum capacity with cooperation inside groups: ``M log2(P/M) + M log2 K' + sum_g log2 det Lambda_g``.

    ``K_prime`` may be real-valued to probe the crossover with
    ``largeK_capacity`` at ``K' = ln K``.
    """
    _check_profile(geometry, profile)
    Kp = geometry.K_prime if K_prime is None else K_prime
    M = geometry.M
    return M * math.log2(P / M) + M * math.log2(Kp) + profile.logdet_sum()


def _xlog_inv(x):
    """``x log2(1/x)`` with its limit 0 at ``x = 0``."""
    return 0.0 if x <= 0 else -x * math.log2(x)


def large_system_ratio(mu, G, profile, P, population="correlated"):
    """Per-antenna (``mu < 1``) or per-user (``mu >= 1``) high-SNR capacity growth.

    ``mu < 1``: reference ``log2(P/(e mu)) + ((1-mu)/mu) log2(1/(1-mu))``,
    lower offset ``log2(mu lambda_min / G)``.

    ``mu >= 1``: reference ``log2(mu P / e) + (mu-1) log2(mu/(mu-1))``,
    lower offset ``log2(lambda_min / G)``.

    The reference is the upper value. With ``population="iid"`` the
    reference is exact and both sides coincide.
    """
    if mu <= 0:
        raise DomainError("mu must be positive")
    if population not in ("correlated", "iid"):
        raise InvalidInputError(f"unknown population {population!r}")
    if mu < 1:
        # ((1-mu)/mu) log(1/(1-mu)) = x log(1/x) / mu with x = 1 - mu
        center = math.log2(P / (math.e * mu)) + _xlog_inv(1 - mu) / mu
    else:
        # (mu-1) log(mu/(mu-1)) = mu * y log(1/y) with y = (mu-1)/mu
        center = math.log2(mu * P / math.e) + mu * _xlog_inv((mu - 1) / mu)
    if population == "iid":
        return BoundPair(center, center, center, "large_system")
    lam_min = profile if isinstance(profile, (int, float)) else profile.lam_min
    offset = math.log2(lam_min / G) + (math.log2(mu) if mu < 1 else 0.0)
    return BoundPair(center + offset, center, center, "large_system")


def fiedler_det_bounds(A, B):
    """Determinant sandwich for the sum of two Hermitian PSD matrices.

    With eigenvalues sorted the same way, ``prod(a_i + b_i) <= det(A + B)
    <= prod(a_i + b_{n-i+1})``.
    """
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError(f"shape mismatch {A.shape} vs {B.shape}")
    a = np.linalg.eigvalsh(A)
    b = np.linalg.eigvalsh(B)
    if a[0] + b[0] < -1e-12 * max(1.0, abs(a[-1]) + abs(b[-1])):
        raise DomainError("smallest eigenvalues must sum to >= 0")
    return float(np.prod(a + b)), float(np.prod(a + b[::-1]))


BOUND_CSV_FIELDS = ("regime", "parameters", "lower", "upper", "center")


def bound_row(pair, **params):
    """CSV row for a bound; parameters are packed as ``k=v`` pairs."""
    return {
        "regime": pair.meta,
        "parameters": ";".join(f"{k}={v}" for k, v in params.items()),
        "lower": pair.lower,
        "upper": pair.upper,
        "center": pair.center,
    }
