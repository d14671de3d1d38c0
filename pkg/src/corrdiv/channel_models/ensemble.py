"""Unitary-structure ensembles, one-ring user populations, and channel draws."""

from dataclasses import dataclass

import numpy as np

from .. import rng as rngmod
from ..errors import GeometryError, InvalidInputError, StructureViolationError
from .covariance import (
    ORTHO_TOL,
    CovarianceMatrix,
    GroupEigenStructure,
    one_ring_covariance_batch,
    psd_sqrt,
)

PROFILE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class UnitaryEnsemble:
    """Groups whose eigenbases are mutually orthogonal.

    The stacked basis ``[U_1, ..., U_G]`` is tall unitary (``rG <= M``).
    """

    groups: tuple

    def __post_init__(self):
        groups = tuple(self.groups)
        if not groups:
            raise InvalidInputError("ensemble needs at least one group")
        M, r = groups[0].M, groups[0].rank
        if any(g.M != M or g.rank != r for g in groups):
            raise InvalidInputError("all groups must share M and rank r")
        if r * len(groups) > M:
            raise GeometryError(f"rG = {r * len(groups)} exceeds M = {M}")
        B = np.hstack([g.basis for g in groups])
        gram = B.conj().T @ B
        if np.max(np.abs(gram - np.eye(B.shape[1]))) > ORTHO_TOL:
            raise StructureViolationError("group eigenspaces are not mutually orthogonal")
        object.__setattr__(self, "groups", groups)

    @property
    def M(self):
        return self.groups[0].M

    @property
    def G(self):
        return len(self.groups)

    @property
    def r(self):
        return self.groups[0].rank

    @property
    def stacked_basis(self):
        return np.hstack([g.basis for g in self.groups])

    def eigenvalues(self):
        """Array of shape ``(G, r)``."""
        return np.stack([g.eigenvalues for g in self.groups])

    @classmethod
    def iid(cls, M):
        """Single group with ``R = I``."""
        return cls((GroupEigenStructure(np.eye(M, dtype=complex), np.ones(M)),))


def haar_unitary(rng, M):
    """Haar-distributed ``M x M`` unitary.

    QR of an i.i.d. complex Gaussian matrix, with column phases chosen so the
    triangular factor has a positive real diagonal.
    """
    Q, R = np.linalg.qr(rngmod.complex_normal(rng, (M, M)))
    d = np.diag(R)
    return Q * (d / np.abs(d))


def _profiles(eigen_profile, G, r, M):
    prof = np.asarray(eigen_profile, dtype=float)
    if prof.ndim == 1:
        prof = np.tile(prof, (G, 1))
    if prof.shape != (G, r):
        raise InvalidInputError(f"eigen profile shape {prof.shape}, expected ({G}, {r})")
    if np.any(prof <= 0):
        raise InvalidInputError("eigenvalues must be positive")
    if np.any(np.abs(prof.sum(axis=1) - M) > PROFILE_TOL * M):
        raise InvalidInputError("each group profile must sum to M")
    return -np.sort(-prof, axis=1)


def synthesize_unitary_ensemble(M, G, r, eigen_profile, seed):
    """Random unitary-structure ensemble with prescribed group eigenvalues.

    Parameters
    ----------
    M, G, r : int
        Antennas, groups, and per-group rank, with ``r * G <= M``.
    eigen_profile : array_like
        One length-``r`` profile shared by all groups, or a ``(G, r)`` array.
        Each row must sum to ``M``; rows are sorted nonincreasing.
    seed : int
        Seed for the Haar draw.
    """
    if r * G > M:
        raise GeometryError(f"rG = {r * G} exceeds M = {M}")
    if min(M, G, r) < 1:
        raise InvalidInputError("M, G, r must be positive")
    prof = _profiles(eigen_profile, G, r, M)
    U = haar_unitary(rngmod.stream(seed), M)
    groups = tuple(
        GroupEigenStructure(U[:, g * r:(g + 1) * r], prof[g]) for g in range(G)
    )
    return UnitaryEnsemble(groups)


def draw_group_factors(rng, ensemble, users_per_group):
    """Per-group reduced channels ``Lambda_g^{1/2} W_g`` of shape ``(r, K')``.

    Groups are drawn in order from ``rng``; ``group_channels`` consumes the
    same draws, so full and reduced evaluations see identical randomness.
    """
    return [
        np.sqrt(g.eigenvalues)[:, None] * rngmod.complex_normal(rng, (g.rank, users_per_group))
        for g in ensemble.groups
    ]


def group_channels(ensemble, factors):
    """Lift reduced channels to antenna space: ``H_g = U_g Lambda_g^{1/2} W_g``."""
    return [g.basis @ f for g, f in zip(ensemble.groups, factors)]


def sample_channels(ensemble, users_per_group, seed):
    """Draw ``users_per_group`` channels for every group.

    Parameters
    ----------
    ensemble : UnitaryEnsemble or sequence of CovarianceMatrix
        With a covariance list, each covariance acts as its own group and
        users are drawn as ``R^{1/2} w``.
    users_per_group : int
    seed : int

    Returns
    -------
    list of ndarray
        One ``M x K'`` matrix per group.
    """
    if users_per_group < 1:
        raise InvalidInputError("users_per_group must be >= 1")
    rng = rngmod.stream(seed)
    if isinstance(ensemble, UnitaryEnsemble):
        return group_channels(ensemble, draw_group_factors(rng, ensemble, users_per_group))
    out = []
    for cov in ensemble:
        R = cov.entries if isinstance(cov, CovarianceMatrix) else np.asarray(cov)
        w = rngmod.complex_normal(rng, (R.shape[0], users_per_group))
        out.append(psd_sqrt(R) @ w)
    return out


@dataclass(frozen=True)
class OneRingPopulation:
    """Users with independent one-ring covariances, redrawn on every call.

    Angles are in radians; each user gets ``theta ~ U(theta_range)`` and
    ``delta ~ U(delta_range)``.
    """

    num_antennas: int
    theta_range: tuple = (-np.pi / 3, np.pi / 3)
    delta_range: tuple = (np.deg2rad(5.0), np.deg2rad(10.0))
    spacing: float = 0.5

    def __post_init__(self):
        lo, hi = self.delta_range
        if not 0 < lo <= hi <= np.pi / 2:
            raise InvalidInputError("delta_range must lie in (0, pi/2]")
        lo, hi = self.theta_range
        if not -np.pi / 2 <= lo <= hi <= np.pi / 2:
            raise InvalidInputError("theta_range must lie in [-pi/2, pi/2]")

    @classmethod
    def from_degrees(cls, num_antennas, theta_deg=(-60.0, 60.0), delta_deg=(5.0, 10.0), spacing=0.5):
        return cls(num_antennas, tuple(np.deg2rad(theta_deg)), tuple(np.deg2rad(delta_deg)), spacing)

    def draw(self, rng, num_users):
        """Channel matrix ``M x K`` for ``num_users`` fresh users."""
        theta = rng.uniform(*self.theta_range, size=num_users)
        delta = rng.uniform(*self.delta_range, size=num_users)
        R = one_ring_covariance_batch(self.num_antennas, theta, delta, self.spacing)
        w = rngmod.complex_normal(rng, (num_users, self.num_antennas))
        return np.einsum("kij,kj->ik", psd_sqrt(R), w)
