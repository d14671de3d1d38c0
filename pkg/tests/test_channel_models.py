import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from corrdiv import GeometryError, InvalidInputError, StructureViolationError
from corrdiv.channel_models import (
    CovarianceMatrix,
    GroupEigenStructure,
    OneRingParams,
    OneRingPopulation,
    UnitaryEnsemble,
    dumps,
    eigen_decompose,
    flat_spectrum,
    loads,
    one_ring_covariance,
    one_ring_covariance_batch,
    one_ring_spectrum,
    sample_channels,
    spectrum_mass,
    synthesize_unitary_ensemble,
    szego_logdet_rate,
)
from corrdiv.rng import stream


def quad_lag(n, theta, delta, spacing):
    """Independent oracle: adaptive quadrature of the one-ring average."""
    def part(f):
        return integrate.quad(lambda w: f(2 * np.pi * spacing * n * np.sin(w + theta)),
                              -delta, delta, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    return (part(np.cos) + 1j * part(np.sin)) / (2 * delta)


class TestOneRing:
    def test_zero_spread_gives_all_ones(self):
        R = one_ring_covariance(OneRingParams(0.0, 1e-9, 0.5, 4)).entries
        np.testing.assert_allclose(R, np.ones((4, 4)), atol=1e-6)

    def test_full_spread_is_real(self):
        R = one_ring_covariance(OneRingParams(0.0, np.pi / 2, 0.7, 2)).entries
        assert abs(R[1, 0].imag) < 1e-12
        assert R[1, 0].real == pytest.approx(quad_lag(1, 0.0, np.pi / 2, 0.7).real, abs=1e-10)

    def test_entry_matches_adaptive_quadrature(self):
        p = OneRingParams.from_degrees(30.0, 10.0, 0.5, 8)
        R = one_ring_covariance(p).entries
        oracle = quad_lag(1, p.theta, p.delta, 0.5)
        assert abs(R[1, 0] - oracle) < 1e-8

    def test_all_lags_match_oracle(self):
        p = OneRingParams.from_degrees(-42.0, 7.0, 0.5, 12)
        R = one_ring_covariance(p).entries
        for n in range(12):
            assert abs(R[n, 0] - quad_lag(n, p.theta, p.delta, 0.5)) < 1e-8

    def test_batch_matches_single(self):
        theta = np.deg2rad([-50.0, 10.0, 33.0])
        delta = np.deg2rad([5.0, 9.0, 20.0])
        batch = one_ring_covariance_batch(6, theta, delta)
        for k in range(3):
            single = one_ring_covariance(OneRingParams(theta[k], delta[k], 0.5, 6)).entries
            np.testing.assert_allclose(batch[k], single, atol=1e-13)

    @pytest.mark.parametrize("theta,delta", [(2.0, 0.1), (0.0, 0.0), (0.0, 1.7)])
    def test_rejects_out_of_range(self, theta, delta):
        with pytest.raises(InvalidInputError):
            OneRingParams(theta, delta)

    @settings(max_examples=30, deadline=None)
    @given(theta=st.floats(-np.pi / 2, np.pi / 2), delta=st.floats(1e-3, np.pi / 2),
           M=st.integers(1, 24))
    def test_valid_covariance(self, theta, delta, M):
        cov = one_ring_covariance(OneRingParams(theta, delta, 0.5, M))
        R = cov.entries
        assert np.max(np.abs(R - R.conj().T)) <= 1e-10
        lam = np.linalg.eigvalsh(R)
        assert lam[0] >= -1e-8 * lam[-1]
        assert np.trace(R).real == pytest.approx(M, rel=1e-8)


class TestCovarianceMatrix:
    def test_rejects_non_hermitian(self):
        with pytest.raises(InvalidInputError):
            CovarianceMatrix(np.array([[1, 1], [0, 1]], dtype=complex))

    def test_rejects_indefinite(self):
        with pytest.raises(InvalidInputError):
            CovarianceMatrix(np.array([[1, 2], [2, 1]], dtype=complex))

    def test_rejects_bad_trace(self):
        with pytest.raises(InvalidInputError):
            CovarianceMatrix(2 * np.eye(3))
        assert CovarianceMatrix(2 * np.eye(3), trace_normalized=False).M == 3


class TestEigenDecompose:
    def test_identity(self):
        s = eigen_decompose(CovarianceMatrix(np.eye(4)))
        assert s.rank == 4
        np.testing.assert_allclose(s.eigenvalues, 1.0)
        np.testing.assert_allclose(s.basis.conj().T @ s.basis, np.eye(4), atol=1e-12)

    def test_all_ones(self):
        s = eigen_decompose(CovarianceMatrix(np.ones((4, 4))))
        assert s.rank == 1
        assert s.eigenvalues[0] == pytest.approx(4.0)

    def test_reconstruction(self):
        R = one_ring_covariance(OneRingParams.from_degrees(20, 30, 0.5, 8)).entries
        s = eigen_decompose(R, 1e-12)
        np.testing.assert_allclose(s.covariance(), R, atol=1e-10)

    def test_effective_rank_at_m256(self):
        p = OneRingParams.from_degrees(0.0, 15.0, 0.5, 256)
        rho = np.sin(np.deg2rad(15.0))
        r = eigen_decompose(one_ring_covariance(p), 1e-4).rank
        assert abs(r / (rho * 256) - 1) <= 0.15

    @pytest.mark.xfail(strict=True, reason="finite-M excess rank is about +27% at M=64; "
                       "the 15% band is only reached near M=256")
    def test_effective_rank_at_m64(self):
        p = OneRingParams.from_degrees(0.0, 15.0, 0.5, 64)
        rho = np.sin(np.deg2rad(15.0))
        r = eigen_decompose(one_ring_covariance(p), 1e-4).rank
        assert abs(r / (rho * 64) - 1) <= 0.15

    def test_group_structure_validation(self):
        with pytest.raises(InvalidInputError):
            GroupEigenStructure(np.eye(3)[:, :2], np.array([1.0, 2.0]))
        with pytest.raises(InvalidInputError):
            GroupEigenStructure(np.ones((3, 2)), np.array([2.0, 1.0]))


class TestUnitaryEnsemble:
    def test_full_rank_flat_is_identity(self):
        ens = synthesize_unitary_ensemble(4, 1, 4, (1, 1, 1, 1), seed=5)
        np.testing.assert_allclose(ens.groups[0].covariance(), np.eye(4), atol=1e-12)

    def test_optimistic_profile(self):
        ens = synthesize_unitary_ensemble(8, 4, 2, (4, 4), seed=1)
        np.testing.assert_allclose(ens.eigenvalues(), 4.0)
        B = ens.stacked_basis
        np.testing.assert_allclose(B.conj().T @ B, np.eye(8), atol=1e-12)

    def test_profile_sorted_and_checked(self):
        ens = synthesize_unitary_ensemble(8, 4, 2, (1, 7), seed=1)
        assert list(ens.eigenvalues()[0]) == [7.0, 1.0]
        with pytest.raises(InvalidInputError):
            synthesize_unitary_ensemble(8, 4, 2, (4, 3), seed=1)

    def test_geometry_errors(self):
        with pytest.raises(GeometryError):
            synthesize_unitary_ensemble(8, 4, 3, (4, 2, 2), seed=0)

    def test_non_orthogonal_groups_rejected(self):
        a = GroupEigenStructure(np.eye(4)[:, :2], np.array([2.0, 2.0]))
        v = np.eye(4)[:, 1:3]
        with pytest.raises(StructureViolationError):
            UnitaryEnsemble((a, GroupEigenStructure(v, np.array([2.0, 2.0]))))

    def test_same_seed_same_basis(self):
        a = synthesize_unitary_ensemble(6, 2, 3, (3, 2, 1), seed=11)
        b = synthesize_unitary_ensemble(6, 2, 3, (3, 2, 1), seed=11)
        np.testing.assert_array_equal(a.stacked_basis, b.stacked_basis)


class TestSampling:
    def test_iid_sample_covariance(self):
        H = sample_channels([np.eye(3)], 100_000, seed=2)[0]
        S = H @ H.conj().T / H.shape[1]
        # each entry of the sample covariance has std error <= 1/sqrt(n)
        assert np.max(np.abs(S - np.eye(3))) < 3 / np.sqrt(H.shape[1]) * 1.5

    def test_group_projection_covariance(self):
        ens = synthesize_unitary_ensemble(6, 2, 2, (4.5, 1.5), seed=3)
        H = sample_channels(ens, 100_000, seed=4)
        n = H[0].shape[1]
        for g, grp in enumerate(ens.groups):
            Y = grp.basis.conj().T @ H[g]
            S = Y @ Y.conj().T / n
            se = grp.eigenvalues / np.sqrt(n)
            assert np.all(np.abs(np.diag(S).real - grp.eigenvalues) < 3 * se)

    def test_cross_group_projection_vanishes(self):
        ens = synthesize_unitary_ensemble(8, 4, 2, (4, 4), seed=3)
        H = sample_channels(ens, 5, seed=4)
        for g in range(4):
            for h in range(4):
                if g != h:
                    assert np.max(np.abs(ens.groups[h].basis.conj().T @ H[g])) < 1e-12

    def test_population_shapes_and_reproducibility(self):
        pop = OneRingPopulation.from_degrees(4)
        a = pop.draw(stream(9, 1), 7)
        b = pop.draw(stream(9, 1), 7)
        assert a.shape == (4, 7)
        np.testing.assert_array_equal(a, b)


class TestSpectrum:
    def test_full_band_support(self):
        s = one_ring_spectrum(OneRingParams(0.0, np.pi / 2, 0.5, 8))
        assert s.support_measure == pytest.approx(1.0)

    def test_support_length(self):
        s = one_ring_spectrum(OneRingParams.from_degrees(0.0, 15.0, 0.5, 8))
        assert s.support_measure == pytest.approx(np.sin(np.deg2rad(15.0)), abs=1e-12)

    def test_support_matches_numeric_sweep(self):
        p = OneRingParams.from_degrees(25.0, 12.0, 0.5, 8)
        s = one_ring_spectrum(p)
        xi = np.linspace(-0.5, 0.5, 400_001)
        swept = np.mean(s(xi) > 0)
        assert swept == pytest.approx(s.support_measure, abs=1e-4)

    @settings(max_examples=20, deadline=None)
    @given(theta=st.floats(-np.pi / 2, np.pi / 2), delta=st.floats(0.02, np.pi / 2),
           spacing=st.sampled_from([0.25, 0.5, 0.8, 1.5]))
    def test_unit_mass(self, theta, delta, spacing):
        s = one_ring_spectrum(OneRingParams(theta, delta, spacing, 8))
        assert spectrum_mass(s) == pytest.approx(1.0, abs=1e-4)

    def test_flat_rate_zero(self):
        assert szego_logdet_rate(flat_spectrum()) == pytest.approx(0.0, abs=1e-12)

    def test_scaled_half_band(self):
        s = flat_spectrum(2.0, ((-0.25, 0.25),))
        assert szego_logdet_rate(s) == pytest.approx(0.5, abs=1e-10)

    def test_szego_matches_finite_m(self):
        p = OneRingParams(0.0, np.pi / 2, 0.5, 256)
        R = one_ring_covariance(p).entries
        finite = np.linalg.slogdet(R)[1] / np.log(2) / 256
        assert abs(finite - szego_logdet_rate(one_ring_spectrum(p))) <= 0.05


class TestSerialization:
    def test_covariance_round_trip(self):
        cov = one_ring_covariance(OneRingParams.from_degrees(10, 8, 0.5, 5))
        back = loads(dumps(cov))
        np.testing.assert_array_equal(back.entries, cov.entries)
        assert json.loads(dumps(cov))["version"] == "tcd-cov/1"

    def test_ensemble_round_trip(self):
        ens = synthesize_unitary_ensemble(8, 4, 2, (7, 1), seed=2)
        back = loads(dumps(ens))
        np.testing.assert_array_equal(back.stacked_basis, ens.stacked_basis)
        np.testing.assert_array_equal(back.eigenvalues(), ens.eigenvalues())

    def test_rejects_unknown_version(self):
        with pytest.raises(InvalidInputError):
            loads('{"version": "tcd-cov/0", "kind": "covariance"}')
