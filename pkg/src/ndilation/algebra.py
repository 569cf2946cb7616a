"""Finite unital matrix *-algebras with faithful normalized traces.

An algebra is a direct sum of full matrix blocks ``M_{n_1} + ... + M_{n_r}``,
each block carrying a positive trace weight ``w_i`` with ``sum(w_i) == 1``.
Elements are stored block by block.

Two concrete coordinate systems are used for tensor products:

* *block order*: the block-diagonal embedding of an algebra in ``C^{d x d}``,
  blocks laid out in their stored order (lexicographic for tensor products).
* *kron order*: the embedding of ``F_1 (x) ... (x) F_k`` in
  ``C^{d_1} (x) ... (x) C^{d_k}`` given by ``np.kron`` of the factors'
  block-order matrices.

:func:`kron_permutation` converts between the two.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

# Absolute tolerance for matrix comparisons is MATRIX_ATOL * sqrt(d).
MATRIX_ATOL = 1e-9
SCALAR_ATOL = 1e-10
WEIGHT_ATOL = 1e-10


class AlgebraError(ValueError):
    """Invalid algebra data or an element that does not belong to an algebra."""


def matrix_tol(dim: int) -> float:
    return float(MATRIX_ATOL * np.sqrt(dim))


@dataclass(frozen=True)
class MatrixAlgebra:
    dims: tuple[int, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.dims) == 0 or len(self.dims) != len(self.weights):
            raise AlgebraError("need one weight per block and at least one block")
        if any(int(n) != n or n < 1 for n in self.dims):
            raise AlgebraError(f"block dimensions must be positive integers: {self.dims}")
        if any(not w > 0 for w in self.weights):
            raise AlgebraError(f"trace weights must be positive: {self.weights}")
        if abs(sum(self.weights) - 1.0) > WEIGHT_ATOL:
            raise AlgebraError(f"trace weights must sum to 1, got {sum(self.weights)!r}")

    @property
    def concrete_dim(self) -> int:
        return sum(self.dims)

    @property
    def gns_dim(self) -> int:
        return sum(n * n for n in self.dims)

    @property
    def num_blocks(self) -> int:
        return len(self.dims)

    @property
    def offsets(self) -> tuple[int, ...]:
        return tuple(int(x) for x in np.cumsum((0,) + self.dims[:-1]))

    @property
    def is_full(self) -> bool:
        return len(self.dims) == 1

    def unit_scales(self) -> np.ndarray:
        """``tr(E* E)`` for a matrix unit ``E`` of each block, i.e. ``w_i / n_i``."""
        return np.array([w / n for n, w in zip(self.dims, self.weights)])

    def signature(self) -> tuple[tuple[int, float], ...]:
        return tuple(zip(self.dims, self.weights))

    def to_json(self) -> dict:
        return {"blocks": [{"dim": n, "weight": w} for n, w in zip(self.dims, self.weights)]}

    def __repr__(self) -> str:
        body = " + ".join(f"M{n}[{w:.4g}]" for n, w in zip(self.dims, self.weights))
        return f"MatrixAlgebra({body})"


def make_algebra(blocks: Iterable) -> MatrixAlgebra:
    """Build an algebra from ``[(dim, weight), ...]`` or from bare dims.

    With bare dims the weights default to ``n_i / sum(n_j)``, the restriction
    of the normalized trace of the enveloping ``C^{d x d}``.
    """
    blocks = list(blocks)
    if not blocks:
        raise AlgebraError("an algebra needs at least one block")
    if all(isinstance(b, (int, np.integer)) for b in blocks):
        dims = tuple(int(b) for b in blocks)
        if any(n < 1 for n in dims):
            raise AlgebraError(f"block dimensions must be positive: {dims}")
        total = sum(dims)
        return MatrixAlgebra(dims, tuple(n / total for n in dims))
    dims, weights = zip(*((int(n), float(w)) for n, w in blocks))
    return MatrixAlgebra(tuple(dims), tuple(weights))


def full_algebra(n: int) -> MatrixAlgebra:
    return MatrixAlgebra((n,), (1.0,))


def diagonal_algebra(probs: Sequence[float] | None = None, n: int | None = None) -> MatrixAlgebra:
    """The diagonal algebra ``C + ... + C``; uniform weights when only ``n`` is given."""
    if probs is None:
        if n is None:
            raise AlgebraError("give either probs or n")
        probs = [1.0 / n] * n
    return make_algebra([(1, p) for p in probs])


def algebra_from_json(data: dict) -> MatrixAlgebra:
    return make_algebra([(b["dim"], b["weight"]) for b in data["blocks"]])


# ---------------------------------------------------------------------------
# elements


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    algebra: MatrixAlgebra
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.blocks) != self.algebra.num_blocks:
            raise AlgebraError(
                f"expected {self.algebra.num_blocks} blocks, got {len(self.blocks)}")
        fixed = []
        for b, n in zip(self.blocks, self.algebra.dims):
            b = np.asarray(b, dtype=complex)
            if b.shape != (n, n):
                raise AlgebraError(f"block of shape {b.shape} in a block of dimension {n}")
            b.setflags(write=False)
            fixed.append(b)
        object.__setattr__(self, "blocks", tuple(fixed))

    def _check(self, other: "AlgebraElement"):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        if other.algebra != self.algebra:
            raise AlgebraError("elements belong to different algebras")
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return AlgebraElement(self.algebra, tuple(a + b for a, b in zip(self.blocks, other.blocks)))

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return AlgebraElement(self.algebra, tuple(a - b for a, b in zip(self.blocks, other.blocks)))

    def __neg__(self):
        return AlgebraElement(self.algebra, tuple(-a for a in self.blocks))

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return AlgebraElement(self.algebra, tuple(scalar * a for a in self.blocks))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __matmul__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return AlgebraElement(self.algebra, tuple(a @ b for a, b in zip(self.blocks, other.blocks)))

    @property
    def H(self) -> "AlgebraElement":
        return AlgebraElement(self.algebra, tuple(a.conj().T for a in self.blocks))

    def to_dense(self) -> np.ndarray:
        """Block-diagonal concrete matrix in block order."""
        d = self.algebra.concrete_dim
        out = np.zeros((d, d), dtype=complex)
        for off, n, b in zip(self.algebra.offsets, self.algebra.dims, self.blocks):
            out[off:off + n, off:off + n] = b
        return out

    def norm(self) -> float:
        """Frobenius norm of the concrete matrix."""
        return float(np.sqrt(sum(np.vdot(b, b).real for b in self.blocks)))

    def allclose(self, other: "AlgebraElement", atol: float | None = None) -> bool:
        if atol is None:
            atol = matrix_tol(self.algebra.concrete_dim)
        return (self - other).norm() <= atol

    def __repr__(self) -> str:
        return f"AlgebraElement({self.algebra!r}, blocks={[b.tolist() for b in self.blocks]})"


def element(alg: MatrixAlgebra, blocks) -> AlgebraElement:
    """Element from a block list, or from a single matrix when ``alg`` is a full block."""
    if isinstance(blocks, np.ndarray) and blocks.ndim == 2:
        blocks = [blocks]
    return AlgebraElement(alg, tuple(np.asarray(b, dtype=complex) for b in blocks))


def identity(alg: MatrixAlgebra) -> AlgebraElement:
    return AlgebraElement(alg, tuple(np.eye(n, dtype=complex) for n in alg.dims))


def zeros(alg: MatrixAlgebra) -> AlgebraElement:
    return AlgebraElement(alg, tuple(np.zeros((n, n), dtype=complex) for n in alg.dims))


def from_dense(alg: MatrixAlgebra, matrix: np.ndarray, atol: float | None = None) -> AlgebraElement:
    """Cut a block-order concrete matrix into blocks.

    Raises :class:`AlgebraError` if the off-block part exceeds ``atol``.
    """
    matrix = np.asarray(matrix, dtype=complex)
    d = alg.concrete_dim
    if matrix.shape != (d, d):
        raise AlgebraError(f"matrix of shape {matrix.shape} for concrete dimension {d}")
    blocks = []
    mask = np.ones((d, d), dtype=bool)
    for off, n in zip(alg.offsets, alg.dims):
        blocks.append(matrix[off:off + n, off:off + n].copy())
        mask[off:off + n, off:off + n] = False
    if alg.num_blocks > 1:
        leak = np.linalg.norm(matrix[mask])
        tol = matrix_tol(d) if atol is None else atol
        if leak > tol:
            raise AlgebraError(f"matrix is not in the algebra (off-block norm {leak:.3e})")
    return AlgebraElement(alg, tuple(blocks))


def random_element(alg: MatrixAlgebra, rng: np.random.Generator) -> AlgebraElement:
    """Ginibre element: i.i.d. standard complex Gaussian entries in every block."""
    return AlgebraElement(alg, tuple(
        (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
        for n in alg.dims))


def trace_density(alg: MatrixAlgebra) -> AlgebraElement:
    """The element ``rho`` with ``trace(alg, X) == Tr(rho X)``."""
    return AlgebraElement(alg, tuple((w / n) * np.eye(n) for n, w in zip(alg.dims, alg.weights)))


def density_diagonal(alg: MatrixAlgebra) -> np.ndarray:
    """Diagonal of the trace density as a block-order vector."""
    return np.concatenate([np.full(n, w / n) for n, w in zip(alg.dims, alg.weights)])


def _check_member(alg: MatrixAlgebra, X: AlgebraElement):
    if not isinstance(X, AlgebraElement):
        raise AlgebraError(f"expected an AlgebraElement, got {type(X).__name__}")
    if X.algebra != alg:
        raise AlgebraError(f"element of {X.algebra!r} used in {alg!r}")


def trace(alg: MatrixAlgebra, X: AlgebraElement) -> complex:
    _check_member(alg, X)
    return complex(sum(w * np.trace(b) / n for n, w, b in zip(alg.dims, alg.weights, X.blocks)))


def inner_product(alg: MatrixAlgebra, X: AlgebraElement, Y: AlgebraElement) -> complex:
    """``tr(X* Y)``, conjugate-linear in ``X``."""
    _check_member(alg, X)
    _check_member(alg, Y)
    return complex(sum(w * np.vdot(x, y) / n
                       for n, w, x, y in zip(alg.dims, alg.weights, X.blocks, Y.blocks)))


# ---------------------------------------------------------------------------
# tensor products


def tensor_algebra(*algebras: MatrixAlgebra) -> MatrixAlgebra:
    """Tensor product; blocks are indexed lexicographically by the factor blocks."""
    if not algebras:
        raise AlgebraError("need at least one factor")
    if len(algebras) == 1:
        return algebras[0]

    def pair(A: MatrixAlgebra, B: MatrixAlgebra) -> MatrixAlgebra:
        blocks = [(n * m, w * v) for n, w in zip(A.dims, A.weights) for m, v in zip(B.dims, B.weights)]
        dims, weights = zip(*blocks)
        # renormalize away the rounding drift of products of weights
        total = sum(weights)
        return MatrixAlgebra(dims, tuple(w / total for w in weights))

    return reduce(pair, algebras)


def tensor_element(*elements: AlgebraElement) -> AlgebraElement:
    alg = tensor_algebra(*(e.algebra for e in elements))
    blocks = [reduce(np.kron, combo) for combo in itertools.product(*(e.blocks for e in elements))]
    return AlgebraElement(alg, tuple(blocks))


def tensor_power(alg: MatrixAlgebra, k: int) -> MatrixAlgebra:
    if k < 1:
        raise AlgebraError("tensor power needs k >= 1")
    return tensor_algebra(*([alg] * k))


def kron_permutation(factors: Sequence[MatrixAlgebra]) -> np.ndarray:
    """Index map from block order to kron order.

    ``perm[i]`` is the kron-order concrete index of block-order index ``i`` of
    ``tensor_algebra(*factors)``, so ``kron_dense[np.ix_(perm, perm)]`` is the
    block-order matrix.
    """
    factors = list(factors)
    strides = []
    s = 1
    for F in reversed(factors):
        strides.append(s)
        s *= F.concrete_dim
    strides = strides[::-1]
    out = []
    for combo in itertools.product(*(range(F.num_blocks) for F in factors)):
        ranges = [F.offsets[i] + np.arange(F.dims[i]) for F, i in zip(factors, combo)]
        grids = np.meshgrid(*ranges, indexing="ij")
        idx = sum(g * st for g, st in zip(grids, strides))
        out.append(idx.ravel())
    return np.concatenate(out)


def to_kron_dense(X: AlgebraElement, factors: Sequence[MatrixAlgebra]) -> np.ndarray:
    """Concrete matrix of an element of ``tensor_algebra(*factors)`` in kron order."""
    alg = tensor_algebra(*factors)
    _check_member(alg, X)
    perm = kron_permutation(factors)
    d = alg.concrete_dim
    out = np.zeros((d, d), dtype=complex)
    out[np.ix_(perm, perm)] = X.to_dense()
    return out


def from_kron_dense(matrix: np.ndarray, factors: Sequence[MatrixAlgebra],
                    atol: float | None = None) -> AlgebraElement:
    alg = tensor_algebra(*factors)
    perm = kron_permutation(factors)
    matrix = np.asarray(matrix, dtype=complex)
    return from_dense(alg, matrix[np.ix_(perm, perm)], atol=atol)


def partial_trace(A: MatrixAlgebra, B: MatrixAlgebra, X: AlgebraElement) -> AlgebraElement:
    """``id_A (x) tr_B`` on ``A (x) B``.

    Contracts the second tensor factor of ``(I (x) rho_B) X`` where ``rho_B``
    is the trace density of ``B``.
    """
    dA, dB = A.concrete_dim, B.concrete_dim
    K = to_kron_dense(X, (A, B)).reshape(dA, dB, dA, dB)
    out = np.einsum("abcb,b->ac", K, density_diagonal(B))
    return from_dense(A, out)


def conditional_expectation(A: MatrixAlgebra, B: MatrixAlgebra, X: AlgebraElement) -> AlgebraElement:
    """The trace-preserving conditional expectation of ``A (x) B`` onto ``A (x) I``."""
    return tensor_element(partial_trace(A, B, X), identity(B))


def matrix_units(alg: MatrixAlgebra) -> list[AlgebraElement]:
    """Matrix units block by block, row-major within each block."""
    units = []
    for i, n in enumerate(alg.dims):
        for r in range(n):
            for c in range(n):
                blocks = [np.zeros((m, m), dtype=complex) for m in alg.dims]
                blocks[i][r, c] = 1.0
                units.append(AlgebraElement(alg, tuple(blocks)))
    return units


# ---------------------------------------------------------------------------
# GNS coordinates


def to_gns_vector(X: AlgebraElement) -> np.ndarray:
    """Coordinates of ``X`` in the orthonormal basis ``E_k / sqrt(w_i / n_i)``."""
    alg = X.algebra
    return np.concatenate([np.sqrt(s) * b.ravel() for s, b in zip(alg.unit_scales(), X.blocks)])


def from_gns_vector(alg: MatrixAlgebra, vec: np.ndarray) -> AlgebraElement:
    vec = np.asarray(vec, dtype=complex)
    if vec.shape != (alg.gns_dim,):
        raise AlgebraError(f"vector of shape {vec.shape} for GNS dimension {alg.gns_dim}")
    blocks, pos = [], 0
    for n, s in zip(alg.dims, alg.unit_scales()):
        blocks.append(vec[pos:pos + n * n].reshape(n, n) / np.sqrt(s))
        pos += n * n
    return AlgebraElement(alg, tuple(blocks))


def adjoint_permutation(alg: MatrixAlgebra) -> np.ndarray:
    """Permutation of GNS coordinates sending each matrix unit ``E_ab`` to ``E_ba``.

    The adjoint map in GNS coordinates is ``v -> conj(v)[perm]``.
    """
    perm, pos = [], 0
    for n in alg.dims:
        idx = np.arange(n * n).reshape(n, n)
        perm.append(pos + idx.T.ravel())
        pos += n * n
    return np.concatenate(perm)


def element_to_json(X: AlgebraElement) -> list:
    return [matrix_to_json(b) for b in X.blocks]


def element_from_json(alg: MatrixAlgebra, data: list) -> AlgebraElement:
    return AlgebraElement(alg, tuple(matrix_from_json(b) for b in data))


def matrix_to_json(M: np.ndarray) -> list:
    """Nested row-major list of ``[re, im]`` pairs."""
    M = np.asarray(M, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def matrix_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise AlgebraError(f"expected a nested [re, im] matrix, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]
