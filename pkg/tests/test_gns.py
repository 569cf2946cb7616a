import numpy as np
import pytest

from ndilation.algebra import element, from_gns_vector, full_algebra, random_element, to_gns_vector
from ndilation.channel import apply, dual, make_channel, transpose_map
from ndilation.factorization import PAULI_X, PAULI_Z, random_unitary_channel
from ndilation.gns import (
    Kind,
    check_conjugation_commutes,
    classify,
    classify_channel,
    conjugation_apply,
    defect_indices,
    isometric_split,
    kernel_selfadjointness_check,
    left_mult_matrix,
    multiplicative_domain,
    representing_matrix,
    representing_matrix_of_map,
    right_mult_matrix,
    stable_multiplicative_domain,
    swap_matrix,
    unital_subalgebra_dims,
)
from ndilation.randomness import ginibre, random_factorized_channel


def rep_of(fn, n=2):
    alg = full_algebra(n)
    return representing_matrix_of_map(alg, lambda X: element(alg, fn(X.to_dense())))


class TestRepresentingMatrix:
    def test_identity(self, M2):
        np.testing.assert_allclose(representing_matrix(make_channel(M2, [np.eye(2)])).matrix, np.eye(4))

    def test_depolarizing(self, depolarizing):
        T = representing_matrix(depolarizing).matrix
        expect = np.zeros((4, 4))
        expect[np.ix_([0, 3], [0, 3])] = 0.5
        np.testing.assert_allclose(T, expect, atol=1e-15)

    def test_automorphism(self, flip):
        T = representing_matrix(flip).matrix
        np.testing.assert_allclose(T, np.kron(PAULI_X, PAULI_X), atol=1e-15)

    def test_paths_agree(self, rng):
        ch = random_factorized_channel(3, 2, rng).channel
        a = representing_matrix(ch, "columns").matrix
        b = representing_matrix(ch, "kronecker").matrix
        assert np.max(np.abs(a - b)) < 1e-12

    def test_weighted_algebra_is_contraction(self):
        ch = random_unitary_channel([np.eye(2), PAULI_Z], [0.5, 0.5]).channel
        assert np.linalg.norm(representing_matrix(ch).matrix, 2) <= 1 + 1e-12


class TestMultiplication:
    def test_left_and_right_match_evaluation(self, rng):
        A = ginibre(3, rng)
        np.testing.assert_allclose(left_mult_matrix(A), rep_of(lambda X: A @ X, 3), atol=1e-14)
        np.testing.assert_allclose(right_mult_matrix(A), rep_of(lambda X: X @ A, 3), atol=1e-14)

    def test_two_by_two_displays_are_swap_conjugates(self, rng):
        # the column-stacking form of the same operators
        A = ginibre(2, rng)
        S = swap_matrix(2)
        np.testing.assert_allclose(S @ left_mult_matrix(A) @ S, np.kron(np.eye(2), A))
        a11, a12, a21, a22 = A.ravel()
        display_R = np.array([[a11, 0, a21, 0], [0, a11, 0, a21], [a12, 0, a22, 0], [0, a12, 0, a22]])
        np.testing.assert_allclose(S @ right_mult_matrix(A) @ S, display_R)

    def test_unit(self):
        np.testing.assert_array_equal(left_mult_matrix(np.eye(2)), np.eye(4))
        np.testing.assert_array_equal(right_mult_matrix(np.eye(2)), np.eye(4))


class TestConjugation:
    def test_swap_entries(self):
        S = swap_matrix(2)
        e = np.eye(4)
        np.testing.assert_array_equal(S @ e[1], e[2])
        np.testing.assert_array_equal(S @ e[2], e[1])

    def test_adjoint(self, rng):
        A = ginibre(3, rng)
        np.testing.assert_allclose(conjugation_apply(3, A.ravel()), A.conj().T.ravel())

    def test_swap_represents_transpose(self):
        np.testing.assert_allclose(swap_matrix(3), rep_of(transpose_map, 3))

    def test_channels_commute(self, depolarizing, flip, rng):
        for ch in (depolarizing, flip, random_factorized_channel(2, 3, rng).channel):
            assert check_conjugation_commutes(representing_matrix(ch)) < 1e-12

    def test_transpose_commutes(self):
        assert check_conjugation_commutes(rep_of(transpose_map)) < 1e-15

    def test_non_star_map_fails(self):
        T = rep_of(lambda X: 1j * X @ PAULI_Z)
        assert check_conjugation_commutes(T) > 0.5


class TestClassify:
    def test_automorphism(self, flip):
        assert classify(representing_matrix(flip)) is Kind.UNITARY

    def test_depolarizing(self, depolarizing):
        assert classify(representing_matrix(depolarizing)) is Kind.PROJECTION

    def test_dephasing(self, dephasing):
        assert classify(representing_matrix(dephasing)) is Kind.PROJECTION

    def test_generic(self, rng):
        assert classify(representing_matrix(random_factorized_channel(2, 2, rng).channel)) is Kind.GENERIC_CONTRACTION

    def test_cross_validation(self, flip, depolarizing, dephasing, rng):
        for ch in (flip, depolarizing, dephasing, random_factorized_channel(2, 2, rng).channel):
            assert classify_channel(ch).consistent

    def test_identity_is_unitary_and_expectation(self, M2):
        c = classify_channel(make_channel(M2, [np.eye(2)]))
        assert c.kind is Kind.UNITARY and c.conditional_expectation and c.consistent

    def test_depolarizing_has_no_unitary_representation(self, depolarizing):
        c = classify_channel(depolarizing)
        assert c.kind is not Kind.UNITARY and not c.automorphism


class TestSplit:
    def test_unitary(self, flip):
        parts = isometric_split(representing_matrix(flip))
        np.testing.assert_allclose(parts.V, representing_matrix(flip).matrix, atol=1e-12)
        assert np.linalg.norm(parts.C_strict) < 1e-12

    def test_projection(self, depolarizing):
        parts = isometric_split(representing_matrix(depolarizing))
        assert parts.rank == 1 and np.linalg.norm(parts.C_strict) < 1e-12

    def test_average_with_identity(self, M2, depolarizing):
        T = 0.5 * (np.eye(4) + representing_matrix(depolarizing).matrix)
        parts = isometric_split(T)
        v = np.array([1, 0, 0, 1]) / np.sqrt(2)
        np.testing.assert_allclose(parts.V, np.outer(v, v), atol=1e-12)
        np.testing.assert_allclose(np.sort(parts.singular_values), [0.5, 0.5, 0.5, 1.0], atol=1e-12)
        np.testing.assert_allclose(parts.V + parts.C_strict, T, atol=1e-12)

    @pytest.mark.parametrize("name, expect", [("flip", (0, 0)), ("depolarizing", (3, 3)), ("dephasing", (2, 2))])
    def test_defect_indices(self, request, name, expect):
        ch = request.getfixturevalue(name)
        assert defect_indices(representing_matrix(ch)) == expect

    def test_mult_dim_is_subalgebra_dim_but_defect_need_not_be(self, depolarizing, dephasing):
        allowed = unital_subalgebra_dims(2)
        for ch in (depolarizing, dephasing):
            assert multiplicative_domain(ch).dim in allowed
        assert defect_indices(representing_matrix(depolarizing))[0] not in allowed

    def test_subalgebra_dims(self):
        assert unital_subalgebra_dims(2) == {1, 2, 4}
        assert unital_subalgebra_dims(3) == {1, 2, 3, 5, 9}


def _spanned(basis, alg, X):
    v = to_gns_vector(X)
    return np.linalg.norm(v - basis @ (basis.conj().T @ v)) < 1e-10


class TestMultiplicativeDomain:
    def test_automorphism(self, flip):
        assert multiplicative_domain(flip).dim == 4

    def test_depolarizing(self, depolarizing, M2):
        md = multiplicative_domain(depolarizing)
        assert md.dim == 1 and _spanned(md.basis, M2, element(M2, np.eye(2)))

    def test_dephasing(self, dephasing, M2):
        md = multiplicative_domain(dephasing)
        assert md.dim == 2
        assert _spanned(md.basis, M2, element(M2, np.diag([1.0, 0])))
        assert _spanned(md.basis, M2, element(M2, np.diag([0, 1.0])))
        assert md.max_angle < 1e-6 and md.closure_residual < 1e-10

    def test_schwarz_equality_on_domain(self, rng):
        ch = random_unitary_channel([np.eye(3), np.diag([1, 1j, -1])], [0.4, 0.6]).channel
        md = multiplicative_domain(ch)
        alg = ch.domain
        for v in md.basis.T:
            A = from_gns_vector(alg, v)
            assert (apply(ch, A.H @ A) - apply(ch, A).H @ apply(ch, A)).norm() < 1e-10


class TestStableDomain:
    def test_automorphism(self, flip):
        sd = stable_multiplicative_domain(flip)
        assert sd.dim == 4 and sd.agrees

    def test_depolarizing(self, depolarizing):
        sd = stable_multiplicative_domain(depolarizing)
        assert sd.dims == (1, 1) and sd.agrees

    def test_phase_flip_mixture(self, M2):
        ch = random_unitary_channel([np.eye(2), PAULI_Z], [0.5, 0.5]).channel
        sd = stable_multiplicative_domain(ch)
        assert sd.converged and sd.dim == 2
        assert _spanned(sd.basis, M2, element(M2, np.diag([1.0, 0])))

    def test_within_gns_dim(self, rng):
        ch = random_factorized_channel(3, 2, rng).channel
        sd = stable_multiplicative_domain(ch)
        assert sd.converged and sd.iterations <= ch.domain.gns_dim


class TestKernel:
    def test_depolarizing(self, depolarizing):
        assert kernel_selfadjointness_check(depolarizing).passed

    def test_automorphism(self, flip):
        kc = kernel_selfadjointness_check(flip)
        assert kc.passed and kc.kernel_residual == 0.0

    def test_random(self, rng):
        assert kernel_selfadjointness_check(random_factorized_channel(2, 2, rng).channel).passed


def test_dual_is_adjoint(rng):
    ch = random_factorized_channel(2, 2, rng).channel
    T = representing_matrix(ch).matrix
    np.testing.assert_allclose(representing_matrix(dual(ch)).matrix, T.conj().T, atol=1e-12)


def test_random_element_coordinates(M2, rng):
    X = random_element(M2, rng)
    assert from_gns_vector(M2, to_gns_vector(X)).allclose(X)
