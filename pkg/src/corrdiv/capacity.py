"""Ergodic DPC sum capacity of the MIMO broadcast channel via its dual MAC.

The sum capacity for one channel realization ``H`` (``M x K``) is

    max_{p >= 0, sum p <= P} log2 det(I + H diag(p) H^H),

which is concave in ``p``. Under the unitary structure the determinant
factors over groups, and each group reduces to the ``r x K'`` channel
``Lambda_g^{1/2} W_g`` while the power budget stays shared.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla
from scipy.optimize import brentq

from . import rng as rngmod
from .channel_models import (
    CovarianceMatrix,
    OneRingPopulation,
    UnitaryEnsemble,
    draw_group_factors,
    group_channels,
    psd_sqrt,
)
from .errors import ConfigError, ConvergenceError, GeometryError, InvalidInputError

LN2 = math.log(2.0)
MAX_FAILURE_RATE = 0.01


def db_to_linear(snr_db):
    return 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)


@dataclass(frozen=True)
class SystemGeometry:
    """System dimensions for the symmetric grouped model.

    Parameters
    ----------
    M : int
        Transmit antennas.
    K : int
        Single-antenna users, split evenly over ``G`` groups.
    G : int
        Number of groups with mutually orthogonal eigenspaces.
    r : int, optional
        Per-group rank; defaults to ``M // G``.
    T : int
        Number of user classes.
    Tc : int, optional
        Coherence interval in symbols; needed only for pilot dimensioning.
    """

    M: int
    K: int
    G: int = 1
    r: Optional[int] = None
    T: int = 1
    Tc: Optional[int] = None

    def __post_init__(self):
        if self.r is None:
            object.__setattr__(self, "r", self.M // self.G)
        for name in ("M", "K", "G", "r", "T"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise InvalidInputError(f"{name} must be a positive integer, got {v}")
        if self.Tc is not None and (int(self.Tc) != self.Tc or self.Tc < 1):
            raise InvalidInputError(f"Tc must be a positive integer, got {self.Tc}")
        if self.K % self.G:
            raise GeometryError(f"K = {self.K} is not a multiple of G = {self.G}")
        if self.r * self.G > self.M:
            raise GeometryError(f"rG = {self.r * self.G} exceeds M = {self.M}")

    @property
    def K_prime(self):
        return self.K // self.G

    @property
    def mu(self):
        return self.M / self.K

    @property
    def strict(self):
        """Whether ``M = rG`` (square unitary structure)."""
        return self.M == self.r * self.G


@dataclass(frozen=True, eq=False)
class PowerAllocation:
    """Per-user dual-MAC powers under a sum budget ``P`` (linear SNR)."""

    powers: np.ndarray
    budget: float

    def __post_init__(self):
        p = np.asarray(self.powers, dtype=float)
        if p.ndim != 1:
            raise InvalidInputError("powers must be one-dimensional")
        if np.any(p < 0):
            raise InvalidInputError("powers must be nonnegative")
        if p.sum() > self.budget + 1e-9 * max(1.0, self.budget):
            raise InvalidInputError(f"powers sum {p.sum()} exceeds budget {self.budget}")
        object.__setattr__(self, "powers", p)

    @classmethod
    def uniform(cls, K, budget):
        return cls(np.full(K, budget / K), budget)


@dataclass(frozen=True)
class CapacityEstimate:
    """Monte Carlo mean of the sum rate with its standard error."""

    mean_bps_hz: float
    std_error: float
    trials: int
    snr_db: float
    failures: int = 0

    def __post_init__(self):
        if self.std_error < 0 or self.trials < 1:
            raise InvalidInputError("std_error must be >= 0 and trials >= 1")

    def ci95(self):
        half = 1.959963984540054 * self.std_error
        return self.mean_bps_hz - half, self.mean_bps_hz + half


def _logdet_nats(H, p):
    """``ln det(I + H diag(p) H^H)`` via Cholesky of the smaller Gram form."""
    M, K = H.shape
    if K < M:
        s = np.sqrt(p)
        Hs = H * s
        A = np.eye(K) + Hs.conj().T @ Hs
    else:
        A = np.eye(M) + (H * p) @ H.conj().T
    try:
        L = np.linalg.cholesky(A)
        return 2.0 * float(np.sum(np.log(np.real(np.diag(L)))))
    except np.linalg.LinAlgError:
        return float(np.linalg.slogdet(A)[1])


def dual_mac_sum_rate(channels, powers):
    """Sum rate ``log2 det(I + sum_k p_k h_k h_k^H)`` in bits per channel use.

    Parameters
    ----------
    channels : ndarray, shape (M, K)
    powers : PowerAllocation or array_like of length K
    """
    H = np.asarray(channels, dtype=complex)
    p = powers.powers if isinstance(powers, PowerAllocation) else np.asarray(powers, dtype=float)
    if H.ndim != 2 or p.shape != (H.shape[1],):
        raise InvalidInputError(f"channels {H.shape} and powers {p.shape} do not match")
    return _logdet_nats(H, p) / LN2


def _waterfill_levels(inv_gain, budget):
    # Stable sort: among equal gains the lowest index is filled first.
    order = np.argsort(inv_gain, kind="stable")
    s = inv_gain[order]
    finite = np.isfinite(s)
    if not finite.any():
        return None
    s = s[finite]
    level = (budget + np.cumsum(s)) / np.arange(1, s.size + 1)
    m = np.nonzero(level > s)[0][-1]
    return np.maximum(level[m] - inv_gain, 0.0)


@dataclass(frozen=True)
class WaterfillResult:
    allocation: PowerAllocation
    rate_bits: float
    iterations: int


def waterfill_blocks(blocks, budget, tol=1e-6, max_iter=500):
    """Maximize ``sum_b log det(I + B_b diag(p_b) B_b^H)`` over a shared budget.

    Each sweep computes every user's effective gain against the
    interference-plus-noise covariance of the others, waterfills all users
    jointly under one water level, and moves toward that point with an exact
    line search. The iteration stops when a sweep gains less than ``tol``
    bits.

    Parameters
    ----------
    blocks : sequence of ndarray
        Channel blocks; users of distinct blocks do not interact.
    budget : float
        Total power ``P`` (linear).

    Raises
    ------
    ConvergenceError
        After ``max_iter`` sweeps; ``best`` holds the last allocation.
    """
    if budget <= 0:
        raise InvalidInputError("budget must be positive")
    blocks = [np.asarray(b, dtype=complex) for b in blocks]
    sizes = [b.shape[1] for b in blocks]
    K = sum(sizes)
    splits = np.cumsum(sizes)[:-1]
    p = np.full(K, budget / K)
    if K == 1:
        return WaterfillResult(PowerAllocation(p, budget), _logdet_nats(blocks[0], p) / LN2, 0)

    def value(pv):
        return sum(_logdet_nats(b, pb) for b, pb in zip(blocks, np.split(pv, splits)))

    tol_nats = tol * LN2
    current = value(p)
    for it in range(1, max_iter + 1):
        grams, gains = [], []
        for b, pb in zip(blocks, np.split(p, splits)):
            A = np.eye(b.shape[0]) + (b * pb) @ b.conj().T
            X = np.linalg.solve(A, b)
            d = np.real(np.sum(b.conj() * X, axis=0))
            grams.append(A)
            gains.append(d / (1.0 - pb * d))
        g = np.concatenate(gains)
        with np.errstate(divide="ignore"):
            inv_g = np.where(g > 0, 1.0 / np.where(g > 0, g, 1.0), np.inf)
        target = _waterfill_levels(inv_g, budget)
        if target is None:
            break
        step = target - p
        mu = np.concatenate([
            sla.eigh((b * sb) @ b.conj().T, A, eigvals_only=True)
            for b, sb, A in zip(blocks, np.split(step, splits), grams)
        ])

        def slope(t):
            return float(np.sum(mu / (1.0 + t * mu)))

        if slope(0.0) <= 0:
            break
        t = 1.0 if slope(1.0) >= 0 else brentq(slope, 0.0, 1.0, xtol=1e-12)
        p = np.maximum(p + t * step, 0.0)
        p *= min(1.0, budget / p.sum())
        new = value(p)
        gained = new - current
        current = max(new, current)
        if gained < tol_nats:
            return WaterfillResult(PowerAllocation(p, budget), current / LN2, it)
    else:
        raise ConvergenceError(
            f"waterfilling did not converge in {max_iter} sweeps",
            best=WaterfillResult(PowerAllocation(p, budget), current / LN2, max_iter),
        )
    return WaterfillResult(PowerAllocation(p, budget), current / LN2, it)


def sum_power_waterfill(channels, budget, tol=1e-6, max_iter=500):
    """Optimal dual-MAC powers for one ``M x K`` channel under sum power ``budget``.

    Raises
    ------
    ConvergenceError
        If ``max_iter`` sweeps pass without a gain below ``tol`` bits. The
        exception's ``best`` attribute is the last ``PowerAllocation``.
    """
    H = np.asarray(channels, dtype=complex)
    if H.ndim != 2:
        raise InvalidInputError("channels must be an M x K matrix")
    try:
        return waterfill_blocks([H], budget, tol, max_iter).allocation
    except ConvergenceError as exc:
        raise ConvergenceError(str(exc), best=exc.best.allocation) from None


# ---------------------------------------------------------------------------
# Monte Carlo engine


def _check_ensemble(geometry, ensemble, mode):
    if mode not in ("full", "per_group"):
        raise ConfigError(f"unknown mode {mode!r}")
    if isinstance(ensemble, UnitaryEnsemble):
        if (ensemble.M, ensemble.G, ensemble.r) != (geometry.M, geometry.G, geometry.r):
            raise GeometryError(
                f"ensemble (M={ensemble.M}, G={ensemble.G}, r={ensemble.r}) does not match geometry"
            )
        return ensemble
    if mode == "per_group":
        raise ConfigError("per_group mode needs a unitary ensemble")
    if isinstance(ensemble, OneRingPopulation):
        if ensemble.num_antennas != geometry.M:
            raise GeometryError("population array size does not match M")
        return ensemble
    covs = [c.entries if isinstance(c, CovarianceMatrix) else np.asarray(c) for c in ensemble]
    if len(covs) != geometry.K or any(c.shape != (geometry.M, geometry.M) for c in covs):
        raise GeometryError("covariance list must hold K matrices of size M x M")
    return np.stack([psd_sqrt(c) for c in covs])


def _trial_rate(source, geometry, budget, seed, trial, mode, tol, max_iter):
    rng = rngmod.stream(seed, trial)
    if isinstance(source, UnitaryEnsemble):
        factors = draw_group_factors(rng, source, geometry.K_prime)
        blocks = factors if mode == "per_group" else [np.hstack(group_channels(source, factors))]
    elif isinstance(source, OneRingPopulation):
        blocks = [source.draw(rng, geometry.K)]
    else:
        w = rngmod.complex_normal(rng, (geometry.K, geometry.M))
        blocks = [np.einsum("kij,kj->ik", source, w)]
    try:
        return waterfill_blocks(blocks, budget, tol, max_iter).rate_bits, False
    except ConvergenceError as exc:
        return exc.best.rate_bits, True


def _trial_range(args):
    source, geometry, budget, seed, lo, hi, mode, tol, max_iter = args
    return [_trial_rate(source, geometry, budget, seed, t, mode, tol, max_iter) for t in range(lo, hi)]


def ergodic_sum_capacity(geometry, ensemble, snr_db, trials=2000, seed=0, mode="full",
                         tol=1e-6, max_iter=500, workers=1):
    """Monte Carlo estimate of the ergodic DPC sum capacity.

    Parameters
    ----------
    geometry : SystemGeometry
    ensemble : UnitaryEnsemble, OneRingPopulation, or sequence of covariances
        A covariance sequence gives one fixed covariance per user. A
        population redraws every user's covariance in each trial.
    snr_db : float
        Total transmit SNR ``P`` in dB.
    trials : int
        Independent channel draws; trial ``t`` uses stream ``(seed, t)``.
    mode : {"full", "per_group"}
        ``per_group`` waterfills the reduced ``r x K'`` group channels
        jointly; it needs a unitary ensemble. Both modes see the same draws.
    workers : int
        Worker processes; the result does not depend on this value.

    Returns
    -------
    CapacityEstimate

    Raises
    ------
    ConvergenceError
        If more than 1% of trials hit ``max_iter``. Fewer failures are
        counted in ``CapacityEstimate.failures`` and use the best iterate.
    """
    if int(trials) != trials or trials < 1:
        raise InvalidInputError("trials must be a positive integer")
    source = _check_ensemble(geometry, ensemble, mode)
    budget = float(db_to_linear(snr_db))
    if workers > 1 and trials > 1:
        edges = np.linspace(0, trials, min(workers, trials) + 1).astype(int)
        jobs = [(source, geometry, budget, seed, lo, hi, mode, tol, max_iter)
                for lo, hi in zip(edges[:-1], edges[1:])]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = [r for chunk in pool.map(_trial_range, jobs) for r in chunk]
    else:
        results = _trial_range((source, geometry, budget, seed, 0, trials, mode, tol, max_iter))
    rates = np.array([r for r, _ in results])
    failures = sum(f for _, f in results)
    if failures > MAX_FAILURE_RATE * trials:
        raise ConvergenceError(f"{failures} of {trials} trials failed to converge")
    mean = math.fsum(rates) / trials
    se = 0.0 if trials == 1 else math.sqrt(math.fsum((rates - mean) ** 2) / (trials - 1) / trials)
    return CapacityEstimate(mean, se, int(trials), float(snr_db), int(failures))


def capacity_vs_users_curve(M, users, K_grid, snr_db, trials=2000, seed=0, mode="full", workers=1):
    """Sum capacity against the number of users.

    Parameters
    ----------
    M : int
        Transmit antennas.
    users : UnitaryEnsemble or OneRingPopulation
        With an ensemble, users join groups round-robin so every ``K`` in the
        grid must be a multiple of ``G``. A population redraws one-ring
        covariances per user and trial.
    K_grid : sequence of int
        Ascending user counts.

    Returns
    -------
    list of CapacityEstimate
    """
    K_grid = [int(k) for k in K_grid]
    if any(b <= a for a, b in zip(K_grid, K_grid[1:])):
        raise ConfigError("K grid must be strictly ascending")
    out = []
    for K in K_grid:
        if isinstance(users, UnitaryEnsemble):
            geom = SystemGeometry(M, K, users.G, users.r)
        else:
            geom = SystemGeometry(M, K)
        out.append(ergodic_sum_capacity(geom, users, snr_db, trials, seed, mode, workers=workers))
    return out


CSV_FIELDS = ("snr_db", "K", "M", "G", "r", "mode", "mean_bps_hz", "std_error", "trials", "seed")


def estimate_row(geometry, estimate, mode, seed):
    """CSV row for one estimate, keyed by ``CSV_FIELDS``."""
    return {
        "snr_db": estimate.snr_db,
        "K": geometry.K,
        "M": geometry.M,
        "G": geometry.G,
        "r": geometry.r,
        "mode": mode,
        "mean_bps_hz": estimate.mean_bps_hz,
        "std_error": estimate.std_error,
        "trials": estimate.trials,
        "seed": seed,
    }
