import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ndilation.algebra import (
    AlgebraError,
    conditional_expectation,
    diagonal_algebra,
    element,
    from_dense,
    from_gns_vector,
    from_kron_dense,
    full_algebra,
    identity,
    inner_product,
    make_algebra,
    matrix_units,
    partial_trace,
    random_element,
    tensor_algebra,
    tensor_element,
    to_gns_vector,
    to_kron_dense,
    trace,
    algebra_from_json,
    element_from_json,
    element_to_json,
)
from ndilation.factorization import swap_unitary

from conftest import brute_partial_trace


def E(i, j, n=2):
    M = np.zeros((n, n))
    M[i, j] = 1
    return M


class TestConstruction:
    def test_single_full_block(self):
        alg = make_algebra([(2, 1.0)])
        assert alg.dims == (2,) and alg.weights == (1.0,)
        assert alg.is_full and alg.concrete_dim == 2 and alg.gns_dim == 4

    def test_uniform_diagonal(self):
        alg = make_algebra([(1, 0.25)] * 4)
        assert alg == diagonal_algebra(n=4)
        assert alg.gns_dim == 4 and alg.num_blocks == 4

    def test_default_weights_proportional_to_size(self):
        alg = make_algebra([1, 2])
        assert alg.weights == pytest.approx((1 / 3, 2 / 3))

    @pytest.mark.parametrize("blocks", [[(2, 0.5)], [(0, 1.0)], [(2, -0.1), (2, 1.1)], []])
    def test_invalid(self, blocks):
        with pytest.raises(AlgebraError):
            make_algebra(blocks)

    def test_json_round_trip(self):
        alg = make_algebra([(1, 0.3), (2, 0.7)])
        assert algebra_from_json(alg.to_json()) == alg


class TestTrace:
    def test_identity(self, M2):
        assert trace(M2, identity(M2)) == pytest.approx(1)

    def test_matrix_unit(self, M2):
        assert trace(M2, element(M2, E(0, 0))) == pytest.approx(0.5)

    def test_diagonal_weights(self):
        alg = diagonal_algebra([0.3, 0.7])
        assert trace(alg, from_dense(alg, np.diag([1.0, 0.0]))) == pytest.approx(0.3)

    def test_inner_products(self, M2):
        e11, e12 = element(M2, E(0, 0)), element(M2, E(0, 1))
        assert inner_product(M2, identity(M2), identity(M2)) == pytest.approx(1)
        assert inner_product(M2, e11, e12) == pytest.approx(0)
        assert inner_product(M2, e12, e12) == pytest.approx(0.5)

    def test_inner_product_conjugate_linear_first(self, M2, rng):
        X, Y = random_element(M2, rng), random_element(M2, rng)
        assert inner_product(M2, X * 1j, Y) == pytest.approx(-1j * inner_product(M2, X, Y))


class TestTensor:
    def test_full_times_full(self):
        assert tensor_algebra(full_algebra(2), full_algebra(2)) == full_algebra(4)

    def test_full_times_diagonal(self):
        alg = tensor_algebra(full_algebra(2), diagonal_algebra(n=4))
        assert alg.signature() == ((2, 0.25),) * 4

    def test_trace_multiplicative(self, rng):
        A, B = make_algebra([(1, 0.3), (2, 0.7)]), diagonal_algebra([0.2, 0.8])
        AB = tensor_algebra(A, B)
        X, Y = random_element(A, rng), random_element(B, rng)
        assert trace(AB, tensor_element(X, Y)) == pytest.approx(trace(A, X) * trace(B, Y))

    def test_kron_layout_round_trip(self, rng):
        A, B = make_algebra([1, 2]), make_algebra([(1, 0.5), (1, 0.5)])
        X, Y = random_element(A, rng), random_element(B, rng)
        K = to_kron_dense(tensor_element(X, Y), (A, B))
        np.testing.assert_allclose(K, np.kron(X.to_dense(), Y.to_dense()))
        assert from_kron_dense(K, (A, B)).allclose(tensor_element(X, Y))

    def test_from_dense_rejects_off_block(self):
        with pytest.raises(AlgebraError):
            from_dense(diagonal_algebra(n=2), np.ones((2, 2)))


class TestPartialTrace:
    def test_on_product(self, M2, rng):
        X = random_element(M2, rng)
        assert partial_trace(M2, M2, tensor_element(X, identity(M2))).allclose(X)

    def test_swap_conjugation(self, M2, rng):
        X = random_element(M2, rng)
        S = swap_unitary(2)
        moved = S @ np.kron(X.to_dense(), np.eye(2)) @ S.conj().T
        out = partial_trace(M2, M2, from_dense(full_algebra(4), moved))
        assert out.allclose(element(M2, trace(M2, X) * np.eye(2)))

    def test_brute_force_index_oracle(self, rng):
        A, B = full_algebra(2), full_algebra(4)
        M = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        got = partial_trace(A, B, from_dense(full_algebra(8), M)).to_dense()
        np.testing.assert_allclose(got, brute_partial_trace(M, 2, 4), atol=1e-12)

    def test_weighted_environment(self, rng):
        A, B = full_algebra(2), diagonal_algebra([0.1, 0.9])
        X, Y = random_element(A, rng), random_element(B, rng)
        got = partial_trace(A, B, tensor_element(X, Y))
        assert got.allclose(X * trace(B, Y))


class TestConditionalExpectation:
    def test_fixes_subalgebra(self, M2, rng):
        X = tensor_element(random_element(M2, rng), identity(M2))
        assert conditional_expectation(M2, M2, X).allclose(X)

    def test_idempotent_and_trace_preserving(self, rng):
        A, B = full_algebra(2), diagonal_algebra(n=3)
        AB = tensor_algebra(A, B)
        X = random_element(AB, rng)
        once = conditional_expectation(A, B, X)
        assert conditional_expectation(A, B, once).allclose(once)
        assert trace(AB, once) == pytest.approx(trace(AB, X))


class TestMatrixUnits:
    def test_row_major_order(self, M2):
        got = [u.to_dense() for u in matrix_units(M2)]
        for g, (i, j) in zip(got, [(0, 0), (0, 1), (1, 0), (1, 1)]):
            np.testing.assert_array_equal(g, E(i, j))

    @pytest.mark.parametrize("alg", [full_algebra(3), make_algebra([(1, 0.2), (2, 0.8)])])
    def test_gram_is_diagonal(self, alg):
        units = matrix_units(alg)
        assert len(units) == alg.gns_dim
        G = np.array([[inner_product(alg, a, b) for b in units] for a in units])
        expected = np.concatenate([[w / n] * n * n for n, w in zip(alg.dims, alg.weights)])
        np.testing.assert_allclose(G, np.diag(expected), atol=1e-15)


@st.composite
def algebras(draw):
    dims = draw(st.lists(st.integers(1, 3), min_size=1, max_size=3))
    raw = draw(st.lists(st.floats(0.1, 1.0), min_size=len(dims), max_size=len(dims)))
    total = sum(raw)
    return make_algebra([(n, w / total) for n, w in zip(dims, raw)])


@settings(max_examples=40, deadline=None)
@given(algebras(), st.integers(0, 2**32 - 1))
def test_gns_coordinates_are_isometric(alg, seed):
    rng = np.random.default_rng(seed)
    X, Y = random_element(alg, rng), random_element(alg, rng)
    vx, vy = to_gns_vector(X), to_gns_vector(Y)
    assert np.vdot(vx, vy) == pytest.approx(inner_product(alg, X, Y), abs=1e-12)
    assert from_gns_vector(alg, vx).allclose(X)


@settings(max_examples=30, deadline=None)
@given(algebras(), st.integers(0, 2**32 - 1))
def test_element_json_round_trip(alg, seed):
    X = random_element(alg, np.random.default_rng(seed))
    Y = element_from_json(alg, element_to_json(X))
    assert np.array_equal(X.to_dense(), Y.to_dense())
