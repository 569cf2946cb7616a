"""Matrix N-dilations ``alpha_N = Ad_{U_N} o sigma_N`` on ``A (x) B^{(x)N}``.

All heavy lifting happens on kron-order concrete matrices of
``C^{d_A} (x) C^{d_B} (x) ... (x) C^{d_B}``. ``sigma_N`` is an axis permutation of
that tensor, moving the last environment slot to the front of the environment
slots; for direct-sum environments this permutes block labels and intra-block
coordinates at once.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import (
    AlgebraElement,
    MatrixAlgebra,
    density_diagonal,
    from_kron_dense,
    identity,
    matrix_tol,
    matrix_units,
    partial_trace,
    random_element,
    tensor_algebra,
    tensor_element,
    to_kron_dense,
)
from .channel import Channel, apply
from .factorization import UnitaryFactorization

DEFAULT_DIM_CAP = 4096


class DimensionCapExceeded(ValueError):
    def __init__(self, dim: int, cap: int):
        super().__init__(f"DIMENSION_CAP_EXCEEDED: dimension {dim} exceeds cap {cap}")
        self.code = "DIMENSION_CAP_EXCEEDED"
        self.dim = dim
        self.cap = cap


@dataclass(frozen=True, eq=False)
class NDilation:
    base: UnitaryFactorization
    N: int
    big_algebra: MatrixAlgebra
    U_N: np.ndarray
    # sigma_N as an axis order of the (d_A, d_B, ..., d_B) tensor
    slot_order: tuple[int, ...]

    @property
    def system(self) -> MatrixAlgebra:
        return self.base.system

    @property
    def environment(self) -> MatrixAlgebra:
        return self.base.environment

    @property
    def factors(self) -> tuple[MatrixAlgebra, ...]:
        return (self.system,) + (self.environment,) * self.N

    @property
    def concrete_dim(self) -> int:
        return self.big_algebra.concrete_dim

    @property
    def tensor_shape(self) -> tuple[int, ...]:
        return (self.system.concrete_dim,) + (self.environment.concrete_dim,) * self.N


def cyclic_slot_order(N: int) -> tuple[int, ...]:
    """Axis order for ``A (x) B_1 ... (x) B_N -> A (x) B_N (x) B_1 ... (x) B_{N-1}``."""
    return (0, N) + tuple(range(1, N))


def build_n_dilation(fact: UnitaryFactorization, N: int, dim_cap: int = DEFAULT_DIM_CAP) -> NDilation:
    if N < 1:
        raise ValueError("N must be at least 1")
    dA, dB = fact.system.concrete_dim, fact.environment.concrete_dim
    D = dA * dB ** N
    if D > dim_cap:
        raise DimensionCapExceeded(D, dim_cap)
    U_N = np.kron(fact.kron_unitary(), np.eye(dB ** (N - 1)))
    big = tensor_algebra(fact.system, *([fact.environment] * N))
    return NDilation(fact, N, big, U_N, cyclic_slot_order(N))


def sigma_dense(dil: NDilation, X: np.ndarray) -> np.ndarray:
    """Apply ``sigma_N`` to a kron-order matrix by relabelling tensor indices."""
    shape = dil.tensor_shape
    k = len(shape)
    T = X.reshape(shape + shape)
    order = dil.slot_order + tuple(k + i for i in dil.slot_order)
    return T.transpose(order).reshape(X.shape)


def alpha_dense(dil: NDilation, X: np.ndarray, M: int = 1) -> np.ndarray:
    if M < 0:
        raise ValueError("M must be non-negative")
    U, Uh = dil.U_N, dil.U_N.conj().T
    for _ in range(M):
        X = U @ sigma_dense(dil, X) @ Uh
    return X


def apply_alpha(dil: NDilation, X: AlgebraElement, M: int = 1) -> AlgebraElement:
    """``alpha_N^(M)(X)`` for ``X`` in the big algebra."""
    Xk = to_kron_dense(X, dil.factors)
    return from_kron_dense(alpha_dense(dil, Xk, M), dil.factors)


def partial_trace_env_dense(dil: NDilation, X: np.ndarray) -> np.ndarray:
    """One-shot ``id_A (x) tr_{B^N}`` of a kron-order matrix; returns a ``d_A x d_A`` matrix."""
    dA = dil.system.concrete_dim
    dBN = X.shape[0] // dA
    rho = density_diagonal(dil.environment)
    weights = rho
    for _ in range(dil.N - 1):
        weights = np.kron(weights, rho)
    T = X.reshape(dA, dBN, dA, dBN)
    return np.einsum("abcb,b->ac", T, weights)


def phi_N_dense(dil: NDilation, X: np.ndarray) -> np.ndarray:
    dA = dil.system.concrete_dim
    return np.kron(partial_trace_env_dense(dil, X), np.eye(X.shape[0] // dA))


def phi_N(dil: NDilation, X: AlgebraElement) -> AlgebraElement:
    """Trace-preserving conditional expectation of ``A (x) B^N`` onto ``A (x) I``."""
    Xk = to_kron_dense(X, dil.factors)
    return from_kron_dense(phi_N_dense(dil, Xk), dil.factors)


def phi_N_nested(dil: NDilation, X: AlgebraElement) -> AlgebraElement:
    """Same map as :func:`phi_N`, built from ``N`` single-factor partial traces."""
    A, B = dil.system, dil.environment
    Y = X
    for k in range(dil.N, 0, -1):
        left = tensor_algebra(A, *([B] * (k - 1)))
        Y = partial_trace(left, B, Y)
    return tensor_element(Y, identity(tensor_algebra(*([B] * dil.N))))


@dataclass(frozen=True)
class DilationReport:
    N: int
    max_residual: float
    worst_basis_index: int
    worst_M: int
    residuals: np.ndarray
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol

    def to_json(self) -> dict:
        return {"N": self.N, "max_residual": self.max_residual,
                "worst_case": {"basis_index": self.worst_basis_index, "M": self.worst_M},
                "pass": self.passed, "tol": self.tol}


def verify_n_dilation(dil: NDilation, tol: float | None = None) -> DilationReport:
    """Max over matrix units ``A`` and ``1 <= M <= N`` of
    ``||Phi_N(alpha^(M)(A (x) I)) - q^(M)(A) (x) I||_F``.
    """
    if tol is None:
        tol = matrix_tol(dil.concrete_dim)
    q = dil.base.channel
    units = matrix_units(dil.system)
    dBN = dil.environment.concrete_dim ** dil.N
    IBN = np.eye(dBN)
    residuals = np.zeros((len(units), dil.N))
    for i, E in enumerate(units):
        X = np.kron(E.to_dense(), IBN)
        target = E
        for M in range(1, dil.N + 1):
            X = alpha_dense(dil, X, 1)
            target = apply(q, target)
            got = partial_trace_env_dense(dil, X)
            # Frobenius norm on A (x) I scales by sqrt(dim B^N)
            residuals[i, M - 1] = np.linalg.norm(got - target.to_dense()) * np.sqrt(dBN)
    flat = int(np.argmax(residuals))
    bi, m = divmod(flat, dil.N)
    return DilationReport(dil.N, float(residuals.max()), bi, m + 1, residuals, tol)


def commute_identity_check(A: MatrixAlgebra, B: MatrixAlgebra, q: Channel,
                           rng: np.random.Generator, samples: int = 10) -> float:
    """Max residual of ``tr_B o (q (x) id_B) == q o tr_B`` on random elements of ``A (x) B``."""
    AB = tensor_algebra(A, B)
    IB = np.eye(B.concrete_dim)
    kraus = [np.kron(k.to_dense(), IB) for k in q.kraus]
    worst = 0.0
    for _ in range(samples):
        X = random_element(AB, rng)
        Xk = to_kron_dense(X, (A, B))
        qX = sum(K @ Xk @ K.conj().T for K in kraus)
        lhs = partial_trace(A, B, from_kron_dense(qX, (A, B)))
        rhs = apply(q, partial_trace(A, B, X))
        worst = max(worst, (lhs - rhs).norm())
    return worst


def expansion_oracle(dil: NDilation, A_elt: AlgebraElement, M: int) -> np.ndarray:
    """Brute-force sum
    ``sum q_{j_M}...q_{j_1} A q_{k_1}*...q_{k_M}* (x) b_{j_M} b_{k_M}* (x) ... (x) b_{j_1} b_{k_1}* (x) I``
    over the unnormalized coefficients ``U = sum_j q_j (x) b_j``.
    """
    coeffs = dil.base.coefficients()
    dB = dil.environment.concrete_dim
    dA = dil.system.concrete_dim
    out = np.zeros((dil.concrete_dim,) * 2, dtype=complex)

    def rec(depth, left, env_slots):
        # left: current A-part ``q_{j_m}...A...q_{k_m}*``; env_slots: list newest-first
        if depth == M:
            env = np.eye(1)
            for s in env_slots:
                env = np.kron(env, s)
            env = np.kron(env, np.eye(dB ** (dil.N - M)))
            out[...] += np.kron(left, env)
            return
        for qj, bj in coeffs:
            for qk, bk in coeffs:
                rec(depth + 1, qj @ left @ qk.conj().T, [bj @ bk.conj().T] + env_slots)

    rec(0, A_elt.to_dense(), [])
    assert out.shape[0] == dA * dB ** dil.N
    return out
