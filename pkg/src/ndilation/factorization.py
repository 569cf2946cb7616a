"""Unitary matrix factorizations ``U = sum_k q_k (x) b_k`` of channels.

Every factorization here is produced by :func:`factorization_from_unitary`:
``U`` is cut into coefficients against the matrix units of the environment
algebra ``B`` and each coefficient is weighted by ``sqrt(tr_B(E* E))`` so that
``(id (x) tr_B)(U (X (x) I) U*)`` reproduces the channel exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .algebra import (
    AlgebraElement,
    MatrixAlgebra,
    diagonal_algebra,
    from_kron_dense,
    full_algebra,
    identity,
    matrix_to_json,
    matrix_tol,
    matrix_units,
    partial_trace,
    tensor_algebra,
    tensor_element,
    to_kron_dense,
)
from .channel import Channel, apply, make_channel

RANK_RTOL = 1e-8

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (np.eye(2, dtype=complex), PAULI_X, PAULI_Y, PAULI_Z)


class FactorizationError(ValueError):
    def __init__(self, code: str, message: str, residual: float | None = None):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.residual = residual


@dataclass(frozen=True, eq=False)
class UnitaryFactorization:
    system: MatrixAlgebra
    environment: MatrixAlgebra
    U: AlgebraElement
    channel: Channel

    @property
    def algebra(self) -> MatrixAlgebra:
        return tensor_algebra(self.system, self.environment)

    def kron_unitary(self) -> np.ndarray:
        """``U`` as a matrix on ``C^{d_A} (x) C^{d_B}``."""
        return to_kron_dense(self.U, (self.system, self.environment))

    def coefficients(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Pairs ``(q_j, F_j)`` with ``U = sum_j q_j (x) F_j`` over the environment's matrix units."""
        dA, dB = self.system.concrete_dim, self.environment.concrete_dim
        K = self.kron_unitary().reshape(dA, dB, dA, dB)
        out = []
        for F in matrix_units(self.environment):
            Fd = F.to_dense()
            b, b2 = np.argwhere(Fd)[0]
            out.append((K[:, b, :, b2].copy(), Fd))
        return out

    def to_json(self) -> dict:
        return {"system": self.system.to_json(), "environment": self.environment.to_json(),
                "U": matrix_to_json(self.kron_unitary()),
                "kraus": [matrix_to_json(k.to_dense()) for k in self.channel.kraus]}


def _unitarity_residual(M: np.ndarray) -> float:
    return float(np.linalg.norm(M.conj().T @ M - np.eye(M.shape[0])))


def factorization_from_unitary(U, system: MatrixAlgebra, environment: MatrixAlgebra,
                               drop_zero: bool = False) -> UnitaryFactorization:
    """Read off the channel ``X -> (id (x) tr_B)(U (X (x) I) U*)`` from a unitary.

    ``U`` is an element of ``system (x) environment`` or its kron-order matrix.
    The Kraus set is ``{sqrt(w_i / n_i) q_{ab}}`` with ``q_{ab}`` the coefficient
    of the matrix unit ``E_ab`` of environment block ``i``.
    """
    factors = (system, environment)
    if isinstance(U, AlgebraElement):
        Uk = to_kron_dense(U, factors)
        Uel = U
    else:
        Uk = np.asarray(U, dtype=complex)
        Uel = from_kron_dense(Uk, factors)
    d = Uk.shape[0]
    res = _unitarity_residual(Uk)
    if res > matrix_tol(d):
        raise FactorizationError("NOT_UNITARY", f"||U*U - I|| = {res:.3e}", res)

    dA, dB = system.concrete_dim, environment.concrete_dim
    K = Uk.reshape(dA, dB, dA, dB)
    kraus = []
    for off, n, s in zip(environment.offsets, environment.dims, environment.unit_scales()):
        for a in range(n):
            for b in range(n):
                q = np.sqrt(s) * K[:, off + a, :, off + b]
                if drop_zero and np.linalg.norm(q) <= matrix_tol(dA):
                    continue
                kraus.append(q)
    fact = UnitaryFactorization(system, environment, Uel, make_channel(system, kraus))
    rep = verify_one_dilation(fact, expectation_check=False)
    if not rep.passed:
        raise FactorizationError("FACTORIZATION_MISMATCH",
                                 f"partial-trace residual {rep.max_residual:.3e}", rep.max_residual)
    return fact


@dataclass(frozen=True)
class OneDilationReport:
    max_residual: float
    residuals: tuple[float, ...]
    expectation_residual: float | None
    tol: float

    @property
    def passed(self) -> bool:
        worst = self.max_residual
        if self.expectation_residual is not None:
            worst = max(worst, self.expectation_residual)
        return worst <= self.tol


def ad_unitary_kron(Uk: np.ndarray, X: np.ndarray) -> np.ndarray:
    return Uk @ X @ Uk.conj().T


def verify_one_dilation(fact: UnitaryFactorization, expectation_check: bool = True,
                        tol: float | None = None) -> OneDilationReport:
    """Check ``q(X) = (id (x) tr_B)(U (X (x) I) U*)`` on every matrix unit ``X`` of the system.

    With ``expectation_check`` also checks ``Phi o Ad_U o Phi = (q o tr_B) (x) I``
    on the matrix units of ``A (x) B``.
    """
    A, B = fact.system, fact.environment
    AB = tensor_algebra(A, B)
    if tol is None:
        tol = matrix_tol(AB.concrete_dim)
    Uk = fact.kron_unitary()
    IB = identity(B)
    residuals = []
    for X in matrix_units(A):
        XI = to_kron_dense(tensor_element(X, IB), (A, B))
        rhs = partial_trace(A, B, from_kron_dense(ad_unitary_kron(Uk, XI), (A, B), atol=np.inf))
        residuals.append((apply(fact.channel, X) - rhs).norm())
    exp_res = None
    if expectation_check:
        exp_res = 0.0
        for Y in matrix_units(AB):
            phiY = partial_trace(A, B, Y)
            inner = to_kron_dense(tensor_element(phiY, IB), (A, B))
            moved = from_kron_dense(ad_unitary_kron(Uk, inner), (A, B), atol=np.inf)
            lhs = tensor_element(partial_trace(A, B, moved), IB)
            rhs = tensor_element(apply(fact.channel, phiY), IB)
            exp_res = max(exp_res, (lhs - rhs).norm())
    return OneDilationReport(max(residuals), tuple(residuals), exp_res, tol)


# ---------------------------------------------------------------------------
# example families


def dft_matrix(N: int) -> np.ndarray:
    """``Omega[k, j] = omega^(k j) / sqrt(N)`` with ``omega = exp(-2 pi i / N)``."""
    k = np.arange(N)
    return np.exp(-2j * np.pi * np.outer(k, k) / N) / np.sqrt(N)


def block_to_tensor(M: np.ndarray, n: int, m: int) -> np.ndarray:
    """Reorder an ``m x m`` grid of ``n x n`` blocks into ``sum Omega_kj (x) E_kj`` (kron order)."""
    # M[k*n + a, j*n + b] = Omega_kj[a, b]; kron index of (a, k) is a*m + k
    T = M.reshape(m, n, m, n).transpose(1, 0, 3, 2)
    return T.reshape(n * m, n * m)


def dft_channel(n: int, m: int) -> UnitaryFactorization:
    """The channel with effects ``{Omega_kj}`` from the ``nm``-point DFT cut into ``n x n`` blocks."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    Omega = dft_matrix(n * m)
    return factorization_from_unitary(block_to_tensor(Omega, n, m), full_algebra(n), full_algebra(m))


def random_unitary_channel(unitaries: Sequence[np.ndarray], probs: Sequence[float]) -> UnitaryFactorization:
    """``q(A) = sum_k p_k U_k A U_k*`` factorized by ``V = sum_k U_k (x) E_k`` over ``(C^N, p)``."""
    unitaries = [np.asarray(u, dtype=complex) for u in unitaries]
    probs = np.asarray(probs, dtype=float)
    if len(unitaries) != len(probs) or len(unitaries) == 0:
        raise ValueError("need one probability per unitary")
    if np.any(probs <= 0) or abs(probs.sum() - 1.0) > 1e-10:
        raise ValueError(f"bad probability vector {probs.tolist()}")
    n = unitaries[0].shape[0]
    for u in unitaries:
        if u.shape != (n, n) or _unitarity_residual(u) > matrix_tol(n):
            raise FactorizationError("NOT_UNITARY", "random-unitary input is not a unitary")
    A = full_algebra(n)
    B = diagonal_algebra(probs)
    V = AlgebraElement(tensor_algebra(A, B), tuple(unitaries))
    return factorization_from_unitary(V, A, B)


def swap_unitary(n: int) -> np.ndarray:
    """``sum_ij E_ij (x) E_ji``, the tensor swap on ``C^n (x) C^n``."""
    S = np.zeros((n * n, n * n), dtype=complex)
    for i in range(n):
        for j in range(n):
            S[j * n + i, i * n + j] = 1.0
    return S


def weyl_operators(n: int) -> list[np.ndarray]:
    """The ``n^2`` clock-and-shift unitaries; the Pauli matrices ``I, X, Y, Z`` for ``n = 2``."""
    if n == 2:
        return [p.copy() for p in PAULIS]
    shift = np.roll(np.eye(n), 1, axis=0).astype(complex)
    clock = np.diag(np.exp(2j * np.pi * np.arange(n) / n))
    return [np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b)
            for a in range(n) for b in range(n)]


def depolarizing_swap(n: int = 2) -> UnitaryFactorization:
    """``tr(X) I`` through the full environment ``M_n`` and the swap unitary."""
    return factorization_from_unitary(swap_unitary(n), full_algebra(n), full_algebra(n))


def depolarizing_pauli(n: int = 2) -> UnitaryFactorization:
    """``tr(X) I`` through ``C^{n^2}`` with uniform trace and ``U = sum_i sigma_i (x) E_ii``."""
    ops = weyl_operators(n)
    return random_unitary_channel(ops, [1.0 / len(ops)] * len(ops))


# ---------------------------------------------------------------------------
# Schur product channels


class CorrelationError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


def check_correlation(C, tol: float | None = None) -> np.ndarray:
    C = np.asarray(C, dtype=complex)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise CorrelationError("NOT_CORRELATION", f"not a square matrix: {C.shape}")
    n = C.shape[0]
    if tol is None:
        tol = matrix_tol(n)
    if np.linalg.norm(C - C.conj().T) > tol:
        raise CorrelationError("NOT_CORRELATION", "matrix is not Hermitian")
    if np.max(np.abs(np.diag(C) - 1.0)) > 1e-10:
        raise CorrelationError("NOT_CORRELATION", "diagonal entries must equal 1")
    if np.linalg.eigvalsh(C).min() < -tol:
        raise CorrelationError("NOT_CORRELATION", "matrix is not positive semidefinite")
    return C


def _psd_factors(C: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Columns ``v_i`` with ``C = sum_i v_i v_i*``, eigenvalues below ``rtol * max`` dropped."""
    lam, vecs = np.linalg.eigh((C + C.conj().T) / 2)
    keep = lam > rtol * lam.max()
    return vecs[:, keep][:, ::-1] * np.sqrt(lam[keep][::-1])


def schur_channel(C) -> Channel:
    """``X -> X o C`` with diagonal Kraus operators ``D_{v_i}`` from ``C = sum v_i v_i*``."""
    C = check_correlation(C)
    V = _psd_factors(C)
    return make_channel(full_algebra(C.shape[0]), [np.diag(v) for v in V.T])


def rank_one_hull_member(C) -> UnitaryFactorization | None:
    """Certificate that ``X -> X o C`` is random unitary, when ``C`` has rank one.

    Returns the single-unitary factorization through ``D_v`` or ``None``
    (membership undecided) for higher rank.
    """
    C = check_correlation(C)
    V = _psd_factors(C)
    if V.shape[1] != 1:
        return None
    v = V[:, 0]
    v = v * np.conj(v[0]) / abs(v[0])
    return random_unitary_channel([np.diag(v)], [1.0])


def clifford_generators(p: int) -> list[np.ndarray]:
    """``p`` self-adjoint, pairwise anti-commuting unitaries of dimension ``2^ceil(p/2)``.

    Jordan-Wigner layout: ``X_{2k-1} = Z^{(k-1)} (x) sigma_x (x) I...`` and
    ``X_{2k} = Z^{(k-1)} (x) sigma_y (x) I...``.
    """
    if p < 1:
        raise ValueError("p must be positive")
    K = (p + 1) // 2
    gens = []
    for k in range(K):
        for s in (PAULI_X, PAULI_Y):
            ops = [PAULI_Z] * k + [s] + [np.eye(2)] * (K - k - 1)
            gens.append(reduce(np.kron, ops).astype(complex))
    return gens[:p]


def gram_factor(C: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Real ``G`` (rank x n) with ``G^T G = C``, upper trapezoidal with non-negative diagonal."""
    lam, vecs = np.linalg.eigh(C)
    keep = lam > rtol * lam.max()
    G = (vecs[:, keep] * np.sqrt(lam[keep])).T
    _, R = np.linalg.qr(G)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return signs[:, None] * R


@dataclass(frozen=True, eq=False)
class CliffordFactorization:
    factorization: UnitaryFactorization
    unitaries: tuple[np.ndarray, ...]
    gram: np.ndarray

    def pairing_residual(self, C: np.ndarray) -> float:
        """``max |tr(u_i* u_j) - c_ij|`` with the normalized trace."""
        D = self.unitaries[0].shape[0]
        P = np.array([[np.trace(a.conj().T @ b) / D for b in self.unitaries] for a in self.unitaries])
        return float(np.max(np.abs(P - C)))


def real_correlation_factorization(C) -> CliffordFactorization:
    """Factorize ``X -> X o C`` for real ``C`` by ``U = sum_j E_jj (x) u_j``.

    ``u_j = sum_k G[k, j] X_k`` with ``X_k`` the Clifford generators and
    ``G^T G = C``, so ``tr(u_i u_j) = c_ij``.
    """
    C = np.asarray(C)
    if np.iscomplexobj(C) and np.max(np.abs(C.imag)) > 1e-12:
        raise CorrelationError("NOT_REAL", "correlation matrix has non-real entries")
    C = check_correlation(np.real(C)).real
    n = C.shape[0]
    G = gram_factor(C)
    gens = clifford_generators(G.shape[0])
    D = gens[0].shape[0]
    us = tuple(sum(G[k, j] * gens[k] for k in range(G.shape[0])) for j in range(n))
    A, B = full_algebra(n), full_algebra(D)
    U = sum(np.kron(np.diag(np.eye(n)[j]), us[j]) for j in range(n))
    fact = factorization_from_unitary(U, A, B)
    return CliffordFactorization(fact, us, G)
