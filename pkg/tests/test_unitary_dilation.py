import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ndilation.algebra import full_algebra
from ndilation.dilation import DimensionCapExceeded, build_n_dilation
from ndilation.factorization import depolarizing_swap, factorization_from_unitary
from ndilation.gns import representing_matrix
from ndilation.randomness import haar_unitary, random_contraction
from ndilation.unitary_dilation import (
    NotContraction,
    bridge_check,
    defect_operators,
    egervary_n_dilation,
    julia,
    psd_sqrt,
    reducing_residual,
    verify_compressions,
)


class TestJulia:
    def test_zero(self):
        Z, I = np.zeros((2, 2)), np.eye(2)
        np.testing.assert_allclose(julia(Z), np.block([[Z, -I], [I, Z]]))

    def test_unitary(self, rng):
        V = haar_unitary(3, rng)
        J = julia(V)
        np.testing.assert_allclose(J[:3, 3:], 0, atol=1e-7)
        np.testing.assert_allclose(J[3:, 3:], V.conj().T)

    def test_half(self):
        J = julia(0.5 * np.eye(2))
        c, s = 0.5, np.sqrt(3) / 2
        np.testing.assert_allclose(J, np.block([[c * np.eye(2), -s * np.eye(2)], [s * np.eye(2), c * np.eye(2)]]))

    def test_not_contraction(self):
        with pytest.raises(NotContraction):
            julia(np.diag([1.1, 0.2]))

    def test_defect_intertwining(self, rng):
        T = random_contraction(4, rng)
        D, Ds = defect_operators(T)
        np.testing.assert_allclose(T @ D, Ds @ T, atol=1e-12)

    def test_psd_sqrt_rejects_negative(self):
        with pytest.raises(ValueError):
            psd_sqrt(np.diag([1.0, -0.1]))


class TestEgervary:
    def test_one_step_is_julia(self, rng):
        T = random_contraction(3, rng)
        np.testing.assert_allclose(egervary_n_dilation(T, 1).U, julia(T))

    def test_scalar_half(self):
        dil = egervary_n_dilation(np.array([[0.5]]), 4)
        assert dil.U.shape == (5, 5)
        np.testing.assert_allclose(dil.U.conj().T @ dil.U, np.eye(5), atol=1e-15)
        for k in range(1, 5):
            assert dil.compression(k)[0, 0] == pytest.approx(2.0 ** -k)

    def test_scalar_boundary(self):
        rep = verify_compressions(egervary_n_dilation(np.array([[0.5]]), 2))
        assert rep.passed and rep.boundary_residual > 0.1

    def test_unitary_input_reduces(self, rng):
        dil = egervary_n_dilation(haar_unitary(3, rng), 3)
        rep = verify_compressions(dil)
        assert max(rep.residuals) < 1e-12 and reducing_residual(dil) < 1e-7

    def test_representing_matrix_of_depolarizing(self, depolarizing):
        T = representing_matrix(depolarizing).matrix
        dil = egervary_n_dilation(T, 3)
        for k in range(1, 4):
            np.testing.assert_allclose(dil.compression(k), np.linalg.matrix_power(T, k), atol=1e-12)

    def test_embedding(self, rng):
        dil = egervary_n_dilation(random_contraction(2, rng), 2)
        J = dil.embedding()
        np.testing.assert_allclose(J.conj().T @ dil.U @ J, dil.T)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_compressions_property(h, N, seed):
    T = random_contraction(h, np.random.default_rng(seed))
    rep = verify_compressions(egervary_n_dilation(T, N))
    assert rep.unitarity_residual < 1e-10
    assert max(rep.residuals[:-1], default=0.0) < 1e-10


class TestBridge:
    def test_identity(self, M2):
        fact = factorization_from_unitary(np.eye(2), M2, full_algebra(1))
        rep = bridge_check(build_n_dilation(fact, 2))
        assert rep.max_residual == 0.0 and rep.passed

    def test_depolarizing_swap(self):
        rep = bridge_check(build_n_dilation(depolarizing_swap(), 2))
        assert rep.passed and len(rep.residuals) == 2
        assert rep.alpha_unitarity < 1e-12 and rep.projection_residual < 1e-12

    def test_cap(self):
        with pytest.raises(DimensionCapExceeded):
            bridge_check(build_n_dilation(depolarizing_swap(), 2), dim_cap=32)
