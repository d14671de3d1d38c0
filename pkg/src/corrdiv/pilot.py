"""Pilot overhead, pre-log dimensioning, and pilot-aware capacity bounds.

Training over a coherence block of ``Tc`` symbols costs channel uses. With
``G`` orthogonal groups, pre-beamformed pilots are shared across groups, so
the cost of training ``q`` eigenmodes per group is ``q`` symbols rather than
``qG``.
"""

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import rng as rngmod
from .asymptotics import EULER_GAMMA, LOG2E, BoundPair, harmonic, harmonic_range
from .errors import ConfigError, DomainError, InvalidInputError, StructureViolationError

SCHEMES = ("fdd_prebeamformed", "tdd_reciprocal")
LEAKAGE_TOL = 1e-8


@dataclass(frozen=True)
class PrelogResult:
    """Stream count ``m_star`` and the resulting degrees of freedom per symbol."""

    m_star: int
    prelog: Fraction
    regime: str
    flags: tuple = field(default=())

    def __post_init__(self):
        if not 0 <= self.prelog <= self.m_star:
            raise InvalidInputError(f"prelog {self.prelog} outside [0, {self.m_star}]")


@dataclass(frozen=True)
class PilotDesign:
    """Pilot configuration for one coherence block.

    ``training_symbols`` is ``q`` for the shared downlink pre-beamformed
    pilot and ``K'`` for orthogonal uplink pilots.
    """

    q: int
    rho_tr: float
    scheme: str
    training_symbols: int

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise InvalidInputError(f"unknown scheme {self.scheme!r}")
        if self.q < 1 or self.rho_tr <= 0 or self.training_symbols < 1:
            raise InvalidInputError("q, rho_tr, and training_symbols must be positive")

    @classmethod
    def for_geometry(cls, geometry, rho_tr, scheme="fdd_prebeamformed", q=None):
        q = geometry.r if q is None else q
        if not 1 <= q <= geometry.r:
            raise InvalidInputError(f"q = {q} outside [1, r = {geometry.r}]")
        symbols = q if scheme == "fdd_prebeamformed" else geometry.K_prime
        return cls(q, rho_tr, scheme, symbols)


def _positive(**kw):
    for k, v in kw.items():
        if int(v) != v or v < 1:
            raise InvalidInputError(f"{k} must be a positive integer, got {v}")


def q_star(r, K_prime, Tc):
    """Eigenmodes per group maximizing ``min(q, K') (Tc - q)``: ``min(r, K', floor(Tc/2))``."""
    _positive(r=r, K_prime=K_prime, Tc=Tc)
    return min(r, K_prime, Tc // 2)


def q_star_search(r, K_prime, Tc):
    """Exhaustive maximizer of ``min(q, K') (Tc - q)`` over ``0 <= q <= r``; ties go to smaller q."""
    values = [min(q, K_prime) * (Tc - q) for q in range(r + 1)]
    return int(np.argmax(values))


def _prelog(M, K, cap, Tc_eff, regime, flags=()):
    m = min(M, K, cap)
    return PrelogResult(m, m * (1 - Fraction(m, Tc_eff)), regime, flags)


def prelog_iid(M, K, Tc):
    """Pre-log ``m (1 - m/Tc)`` with ``m = min(M, K, floor(Tc/2))`` for i.i.d. fading."""
    _positive(M=M, K=K, Tc=Tc)
    return _prelog(M, K, Tc // 2, Tc, "iid")


def prelog_tcd(M, K, G, Tc):
    """Pre-log ``m (1 - m/(Tc G))`` with ``m = min(M, K, floor(Tc G / 2))`` for ``G`` groups."""
    _positive(M=M, K=K, G=G, Tc=Tc)
    return _prelog(M, K, Tc * G // 2, Tc * G, "tcd")


def prelog_multiclass(M, K, G, T, Tc):
    """Pre-log with ``T`` classes sharing time/frequency resources for training.

    ``m (1 - m T/(Tc G))`` with ``m = min(M, K, floor(Tc G / (2T)))``. When
    ``T >= G`` grouping brings no pilot saving; a warning is issued and the
    result is flagged.
    """
    _positive(M=M, K=K, G=G, T=T, Tc=Tc)
    flags = ()
    if T >= G:
        warnings.warn(f"T = {T} >= G = {G}: shared pre-beamformed pilots give no saving",
                      stacklevel=2)
        flags = ("T_ge_G",)
    m = min(M, K, Tc * G // (2 * T))
    return PrelogResult(m, m * (1 - Fraction(m * T, Tc * G)), "multiclass", flags)


def _require_tc(geometry):
    if geometry.Tc is None:
        raise ConfigError("geometry.Tc is required for pilot dimensioning")
    return geometry.Tc


def _epsilon(profile):
    return float(profile) if isinstance(profile, (int, float)) else profile.epsilon


def _lam_min(profile):
    return float(profile) if isinstance(profile, (int, float)) else profile.lam_min


def _xlog_inv(x):
    return 0.0 if x <= 0 else -x * math.log2(x)


def system2_objective(q, K_prime, Tc, P, m_star):
    """``m* {(1 - q/Tc) log2((P/e)(q/K')) + (q/K' - 1) log2(q/(q - K'))}``.

    The second term is taken as its limit 0 at ``q = K'``.
    """
    if q < K_prime:
        raise DomainError(f"objective undefined for q = {q} < K' = {K_prime}")
    x = q / K_prime
    # (x - 1) log(x/(x-1)) = x * y log(1/y) with y = (x - 1)/x
    gain = x * _xlog_inv((x - 1) / x)
    return m_star * ((1 - q / Tc) * math.log2(P / math.e * x) + gain)


@dataclass(frozen=True)
class System2Result:
    """Optimal total eigenmode count for system II and the objective profile."""

    m_p2_star: int
    q_opt: int
    f_values: dict
    m_star: int


def system2_optimize(geometry, P):
    """Choose how many eigenmodes per group to train when ``M > K``.

    Searches ``q`` over ``[q*, r]`` for the largest objective (ties toward
    smaller ``q``) and reports ``M_p2* = G q``.

    Raises
    ------
    DomainError
        If ``M <= K`` or ``q* < K'`` (no feasible ``q`` with ``q >= K'``).
    """
    Tc = _require_tc(geometry)
    if geometry.mu <= 1:
        raise DomainError("system II needs M > K")
    Kp, r, G = geometry.K_prime, geometry.r, geometry.G
    qs = q_star(r, Kp, Tc)
    if qs < Kp:
        raise DomainError(f"q* = {qs} < K' = {Kp}: coherence block too short for system II")
    m_star = qs * G
    f = {q: system2_objective(q, Kp, Tc, P, m_star) for q in range(qs, r + 1)}
    best = max(f, key=lambda q: (f[q], -q))
    return System2Result(G * best, best, f, m_star)


def _pilot_common(geometry):
    Tc = _require_tc(geometry)
    qs = q_star(geometry.r, geometry.K_prime, Tc)
    if qs < 1:
        raise DomainError("coherence block too short: q* = 0")
    return Tc, qs, 1 - qs / Tc, Fraction(qs, geometry.K_prime)


def pilot_bound_largeG(geometry, profile, P):
    """System I rate per trained stream when the number of groups grows.

    Reference ``(1 - q*/Tc) {log2(P/q*) + log2 e (-gamma + sum_{l=2}^{K'} 1/l + h)}``
    where ``h = ((1-mu_p1)/mu_p1) sum_{l=L}^{K'} 1/l`` for ``M < K`` and
    ``h = 0`` otherwise, with ``mu_p1 = q*/K'`` and
    ``L = floor((1 - mu_p1) K') + 1``. The lower value adds
    ``(1 - q*/Tc) log2(mu_p1 eps)`` (``M < K``) or ``(1 - q*/Tc) log2 eps``.
    """
    Tc, qs, disc, mu_p1 = _pilot_common(geometry)
    Kp = geometry.K_prime
    eps = _epsilon(profile)
    flags = []
    inner = -EULER_GAMMA + harmonic(Kp) - 1.0
    below = geometry.mu < 1
    if below:
        start_exact = (1 - mu_p1) * Kp
        start = math.floor(start_exact) + 1
        if start_exact.denominator != 1:
            flags.append("harmonic_limit_rounded")
        inner += float((1 - mu_p1) / mu_p1) * harmonic_range(start, Kp)
    center = disc * (math.log2(P / qs) + LOG2E * inner)
    offset = disc * math.log2((float(mu_p1) if below else 1.0) * eps)
    return BoundPair(center + offset, center, center, "pilot", tuple(flags))


def pilot_bound_largeR(geometry, profile, P):
    """System I rate per trained stream when the group rank grows.

    Reference ``(1 - q*/Tc) {log2(P/(e mu_p1)) + ((1-mu_p1)/mu_p1) log2(1/(1-mu_p1))}``
    with lower offset ``(1 - q*/Tc) log2(mu_p1 eps)``.
    """
    Tc, qs, disc, mu_p1 = _pilot_common(geometry)
    mu = float(mu_p1)
    if mu > 1:
        raise DomainError("mu_p1 > 1 cannot occur in system I")
    center = disc * (math.log2(P / (math.e * mu)) + _xlog_inv(1 - mu) / mu)
    offset = disc * math.log2(mu * _epsilon(profile))
    return BoundPair(center + offset, center, center, "pilot")


def pilot_bound_system2(geometry, profile, P, m_p2_star, c_p2=0.0):
    """System II rate per user with ``M_p2*`` trained eigenmodes.

    Reference ``(1 - M_p2*/(Tc G)) {log2(mu_p2 P/e) + (mu_p2 - 1) log2(mu_p2/(mu_p2 - 1)) + c_p2}``
    with ``mu_p2 = M_p2*/K``; the lower value adds
    ``(1 - M_p2*/(Tc G)) log2(lambda_min/G)``. The additive constant
    ``c_p2`` has no closed form; it defaults to 0 and the result is flagged.
    """
    Tc = _require_tc(geometry)
    mu = m_p2_star / geometry.K
    if mu <= 1:
        raise DomainError(f"mu_p2 = {mu} must exceed 1")
    disc = 1 - m_p2_star / (Tc * geometry.G)
    if disc <= 0:
        raise DomainError("training consumes the whole coherence block")
    center = disc * (math.log2(mu * P / math.e) + mu * _xlog_inv((mu - 1) / mu) + c_p2)
    offset = disc * math.log2(_lam_min(profile) / geometry.G)
    return BoundPair(center + offset, center, center, "pilot", (f"c_p2={c_p2}",))


# ---------------------------------------------------------------------------
# Training simulation


@dataclass(frozen=True, eq=False)
class TrainingReport:
    """Outcome of simulated pilot transmission.

    Attributes
    ----------
    estimates : list of ndarray
        Per-group ``r x K'`` effective channel estimates from the last trial.
    truth : list of ndarray
        Matching ``U_g^H H_g`` from the last trial.
    mse : float
        Mean squared error per complex entry over all trials.
    mse_std_error : float
    leakage : float
        Largest inter-group pilot leakage relative to the in-group signal.
    symbols : int
        Training symbols consumed.
    baseline_symbols : int
        Symbols a non-grouped scheme needs (``M`` downlink, ``K`` uplink).
    per_trial_mse : ndarray
    """

    estimates: list
    truth: list
    mse: float
    mse_std_error: float
    leakage: float
    symbols: int
    baseline_symbols: int
    per_trial_mse: np.ndarray


def _groups_of(ensemble):
    return tuple(ensemble.groups) if hasattr(ensemble, "groups") else tuple(ensemble)


def _one_training(groups, Kp, rho, rng, scheme, noiseless):
    # Channels h = U_g Lambda_g^{1/2} w for every user of every group.
    H = [g.basis @ (np.sqrt(g.eigenvalues)[:, None] * rngmod.complex_normal(rng, (g.rank, Kp)))
         for g in groups]
    r = groups[0].rank
    if scheme == "fdd_prebeamformed":
        X = rho * sum(g.basis for g in groups)  # M x r, one symbol per column
        ests, truth, leak = [], [], 0.0
        for gi, (g, Hg) in enumerate(zip(groups, H)):
            noise = 0.0 if noiseless else rngmod.complex_normal(rng, (Kp, r))
            Y = Hg.conj().T @ X + noise  # K' x r received pilots
            ests.append(Y.conj().T / rho)  # r x K'
            truth.append(g.basis.conj().T @ Hg)
            own = np.linalg.norm(Hg.conj().T @ g.basis)
            other = sum(np.linalg.norm(Hg.conj().T @ h.basis) for hi, h in enumerate(groups) if hi != gi)
            leak = max(leak, other / max(own, 1e-300))
        return ests, truth, leak
    M = groups[0].M
    noise = 0.0 if noiseless else rngmod.complex_normal(rng, (M, Kp))
    # Every group reuses the same K' orthogonal pilots, X = rho I.
    Y = rho * sum(H) + noise
    ests = [g.basis.conj().T @ Y / rho for g in groups]
    truth = [g.basis.conj().T @ Hg for g, Hg in zip(groups, H)]
    leak = 0.0
    for gi, g in enumerate(groups):
        own = np.linalg.norm(g.basis.conj().T @ H[gi])
        other = sum(np.linalg.norm(g.basis.conj().T @ Hh) for hi, Hh in enumerate(H) if hi != gi)
        leak = max(leak, other / max(own, 1e-300))
    return ests, truth, leak


def simulate_training(ensemble, geometry, rho_tr, noise_seed, scheme="fdd_prebeamformed",
                      trials=1, noiseless=False):
    """Simulate group-shared training and least-squares recovery of ``U_g^H H_g``.

    Downlink: the pilot matrix ``rho_tr sum_g U_g`` spans ``r`` symbols and
    each user feeds back its ``r`` observations. Uplink: every group reuses
    the same ``K'`` orthogonal pilots and the base station separates groups
    with ``U_g^H``. Noise is unit-variance complex Gaussian, so the error per
    entry has variance ``1/rho_tr^2``.

    Raises
    ------
    StructureViolationError
        If pilots leak across groups beyond ``LEAKAGE_TOL``.
    """
    if scheme not in SCHEMES:
        raise InvalidInputError(f"unknown scheme {scheme!r}")
    if rho_tr <= 0:
        raise InvalidInputError("rho_tr must be positive")
    groups = _groups_of(ensemble)
    Kp = geometry.K_prime
    per_trial = np.empty(trials)
    leak = 0.0
    for t in range(trials):
        ests, truth, lk = _one_training(groups, Kp, rho_tr, rngmod.stream(noise_seed, t), scheme, noiseless)
        leak = max(leak, lk)
        if leak > LEAKAGE_TOL:
            raise StructureViolationError(f"inter-group pilot leakage {leak:.3g}")
        per_trial[t] = np.mean([np.mean(np.abs(e - h) ** 2) for e, h in zip(ests, truth)])
    se = float(per_trial.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    fdd = scheme == "fdd_prebeamformed"
    return TrainingReport(
        ests, truth, float(per_trial.mean()), se, leak,
        groups[0].rank if fdd else Kp,
        groups[0].M if fdd else geometry.K,
        per_trial,
    )


PRELOG_CSV_FIELDS = ("M", "K", "G", "T", "Tc", "q_star", "m_star", "prelog", "regime")


def prelog_row(M, K, G, T, Tc, result):
    return {
        "M": M, "K": K, "G": G, "T": T, "Tc": Tc,
        "q_star": result.m_star if result.regime == "iid" else result.m_star / G,
        "m_star": result.m_star,
        "prelog": float(result.prelog),
        "regime": result.regime,
    }
