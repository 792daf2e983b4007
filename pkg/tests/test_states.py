"""States: Schmidt decomposition against an SVD oracle, Haar sampling against
the closed-form 2x2 marginal-eigenvalue distribution, named families, JSON."""

import numpy as np
import pytest

from entbounds.errors import (
    DimensionMismatch,
    DomainError,
    NotNormalized,
    ParseError,
)
from entbounds.linalg import partial_trace, partial_transpose, trace_norm
from entbounds.states import (
    DensityMatrix,
    PureState,
    SchmidtVector,
    haar_random_pure,
    haar_random_pure_batch,
    make_isotropic,
    make_max_entangled,
    make_product,
    schmidt_coefficients_batch,
    schmidt_decompose,
    state_from_json,
    state_to_json,
)


class TestSchmidtVector:
    def test_valid(self):
        sv = SchmidtVector([0.5, 0.3, 0.2, 0.0])
        assert len(sv) == 4
        assert sv.mu.sum() == pytest.approx(1.0)

    def test_violations_raise(self):
        with pytest.raises(DomainError):
            SchmidtVector([0.2, 0.5, 0.3, 0.0])  # not descending
        with pytest.raises(DomainError):
            SchmidtVector([0.5, 0.3, 0.1, 0.0])  # sum != 1
        with pytest.raises(DomainError):
            SchmidtVector([1.2, -0.2])  # out of range

    def test_sorted_helper_is_explicit(self):
        sv = SchmidtVector.sorted([0.1, 0.4, 0.3, 0.2])
        assert np.allclose(sv.mu, [0.4, 0.3, 0.2, 0.1])


class TestSchmidtDecompose:
    def test_product_state(self):
        psi = make_product([1, 0, 0, 0], [1, 0, 0, 0])
        dec = schmidt_decompose(psi)
        assert np.allclose(dec.coefficients.mu, [1, 0, 0, 0])

    def test_uniform(self):
        dec = schmidt_decompose(make_max_entangled(4, 4))
        assert np.allclose(dec.coefficients.mu, [0.25] * 4)

    def test_random_4x6_matches_svd_oracle(self):
        rng = np.random.default_rng(12)
        v = rng.standard_normal(24) + 1j * rng.standard_normal(24)
        v /= np.linalg.norm(v)
        psi = PureState(4, 6, v)
        dec = schmidt_decompose(psi)
        sv = np.linalg.svd(v.reshape(4, 6), compute_uv=False)
        assert np.abs(dec.coefficients.mu - np.sort(sv**2)[::-1]).max() < 1e-9
        # and against the reduced-density route
        red = partial_trace(psi.density_matrix().matrix, 4, 6, "A")
        w = np.sort(np.linalg.eigvalsh(red))[::-1]
        assert np.abs(dec.coefficients.mu - w).max() < 1e-9

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_reconstruction(self, seed):
        psi = haar_random_pure(4, 5, seed)
        dec = schmidt_decompose(psi)
        rebuilt = np.zeros(20, dtype=complex)
        for i, mu in enumerate(dec.coefficients.mu):
            rebuilt += np.sqrt(mu) * np.kron(dec.basis_a[:, i], dec.basis_b[:, i])
        fidelity = abs(np.vdot(rebuilt, psi.amplitudes)) ** 2
        assert fidelity >= 1 - 1e-10

    def test_swaps_when_a_is_larger(self):
        rng = np.random.default_rng(13)
        v = rng.standard_normal(24) + 1j * rng.standard_normal(24)
        v /= np.linalg.norm(v)
        psi = PureState(6, 4, v)
        dec = schmidt_decompose(psi)
        assert dec.swapped
        assert len(dec.coefficients) == 4
        sv = np.linalg.svd(v.reshape(6, 4), compute_uv=False)
        assert np.abs(dec.coefficients.mu - np.sort(sv**2)[::-1]).max() < 1e-9

    def test_reconstruction_degenerate(self):
        dec = schmidt_decompose(make_product([0, 1, 0, 0], [0, 0, 1, 0]))
        rebuilt = np.zeros(16, dtype=complex)
        for i, mu in enumerate(dec.coefficients.mu):
            rebuilt += np.sqrt(mu) * np.kron(dec.basis_a[:, i], dec.basis_b[:, i])
        target = make_product([0, 1, 0, 0], [0, 0, 1, 0]).amplitudes
        assert abs(np.vdot(rebuilt, target)) ** 2 >= 1 - 1e-10
        # completion columns stay orthonormal
        bb = dec.basis_b.conj().T @ dec.basis_b
        assert np.abs(bb - np.eye(4)).max() < 1e-10


class TestHaar:
    def test_deterministic(self):
        a = haar_random_pure(4, 4, 123)
        b = haar_random_pure(4, 4, 123)
        assert np.array_equal(a.amplitudes, b.amplitudes)

    def test_normalized(self):
        rng = np.random.default_rng(0)
        batch = haar_random_pure_batch(4, 4, 100, rng)
        assert np.allclose(np.linalg.norm(batch, axis=1), 1.0)

    def test_largest_coefficient_mean_against_density_oracle(self):
        # Oracle: for 2x2 Haar states the joint eigenvalue density is
        # proportional to (mu1 - mu2)^2 on the simplex, so the density of the
        # larger coefficient is p(x) = 6 (2x - 1)^2 on [1/2, 1]; its mean is
        # computed by quadrature below (7/8, not any other round number).
        xs = np.linspace(0.5, 1.0, 400001)
        p = 6.0 * (2.0 * xs - 1.0) ** 2
        oracle_mean = np.trapezoid(xs * p, xs) / np.trapezoid(p, xs)
        assert oracle_mean == pytest.approx(0.875, abs=1e-9)

        rng = np.random.default_rng(77)
        batch = haar_random_pure_batch(2, 2, 100000, rng)
        mu = schmidt_coefficients_batch(batch, 2, 2)
        assert abs(mu[:, 0].mean() - oracle_mean) < 0.01

    def test_dims_too_small(self):
        with pytest.raises(DomainError):
            haar_random_pure(1, 4, 0)


class TestIsotropic:
    def test_maximally_mixed_at_uniform_fidelity(self):
        rho = make_isotropic(4, 1 / 16)
        assert np.allclose(rho.matrix, np.eye(16) / 16)
        pt = partial_transpose(rho.matrix, 4, 4, "A")
        assert (trace_norm(pt) - 1) / 2 == pytest.approx(0.0, abs=1e-12)

    def test_pure_limit_negativity(self):
        rho = make_isotropic(4, 1.0)
        pt = partial_transpose(rho.matrix, 4, 4, "A")
        assert (trace_norm(pt) - 1) / 2 == pytest.approx(1.5, abs=1e-9)

    def test_fidelity_overlap(self):
        psi = make_max_entangled(4, 4).amplitudes
        for f in (0.1, 0.37, 0.9):
            rho = make_isotropic(4, f)
            overlap = float(np.real(psi.conj() @ rho.matrix @ psi))
            assert overlap == pytest.approx(f, abs=1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            make_isotropic(4, 1.2)


class TestFamilies:
    def test_max_entangled(self):
        assert np.allclose(
            schmidt_decompose(make_max_entangled(4, 6)).coefficients.mu, [0.25] * 4
        )
        assert np.allclose(
            schmidt_decompose(make_max_entangled(2, 2)).coefficients.mu, [0.5, 0.5]
        )
        with pytest.raises(DimensionMismatch):
            make_max_entangled(4, 3)

    def test_product(self):
        psi = make_product([1, 0, 0, 0], [0, 1, 0, 0])
        mu = schmidt_decompose(psi).coefficients.mu
        assert mu[0] == pytest.approx(1.0)
        assert np.all(mu[1:] < 1e-12)
        with pytest.raises(NotNormalized):
            make_product([1, 1, 0, 0], [1, 0, 0, 0])


class TestJson:
    def test_pure_roundtrip(self):
        psi = haar_random_pure(4, 4, 3)
        again = state_from_json(state_to_json(psi))
        assert isinstance(again, PureState)
        assert np.allclose(again.amplitudes, psi.amplitudes)

    def test_mixed_roundtrip(self):
        rho = make_isotropic(4, 0.7)
        again = state_from_json(state_to_json(rho))
        assert isinstance(again, DensityMatrix)
        assert np.allclose(again.matrix, rho.matrix)

    def test_malformed_json_has_line_context(self):
        with pytest.raises(ParseError, match="line"):
            state_from_json('{"dimA": 2,\n "broken"')

    def test_wrong_schema(self):
        with pytest.raises(ParseError):
            state_from_json('{"dimA": 2, "dimB": 2}')
