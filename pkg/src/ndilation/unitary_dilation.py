"""Unitary dilations of Hilbert-space contractions.

The N-dilation acts on ``H^{N+1}`` with the block layout::

    [ T    0  ...  0   -D_{T*} ]
    [ D_T  0  ...  0    T*     ]
    [ 0    I  ...  0    0      ]
    [ ...       .       ...    ]
    [ 0    0  ...  I    0      ]

where ``D_T = sqrt(I - T*T)``. Column orthogonality follows from
``T D_T = D_{T*} T``. Content leaving ``H`` walks down the identity chain and
returns to ``H`` only after ``N + 1`` steps, so ``P U^k P = T^k`` for ``k <= N``.
For ``N = 1`` this is the Julia operator.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import AlgebraElement, from_kron_dense, matrix_tol, to_kron_dense
from .channel import apply_power
from .dilation import (
    DEFAULT_DIM_CAP,
    DimensionCapExceeded,
    NDilation,
    alpha_dense,
    partial_trace_env_dense,
    phi_N_dense,
)
from .gns import representing_matrix_of_map

CONTRACTION_SLACK = 1e-12
CLAMP = 1e-12


class NotContraction(ValueError):
    def __init__(self, norm: float):
        super().__init__(f"NOT_CONTRACTION: operator norm {norm:.16g}")
        self.code = "NOT_CONTRACTION"
        self.norm = norm


def psd_sqrt(H: np.ndarray) -> np.ndarray:
    """Square root of a Hermitian PSD matrix; eigenvalues in ``[-1e-12, 0)`` are clamped to 0."""
    H = (H + H.conj().T) / 2
    lam, V = np.linalg.eigh(H)
    if lam.min(initial=0.0) < -CLAMP:
        raise ValueError(f"matrix is not positive semidefinite: eigenvalue {lam.min():.3e}")
    return (V * np.sqrt(np.clip(lam, 0.0, None))) @ V.conj().T


def defect_operators(T: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(sqrt(I - T*T), sqrt(I - TT*))``."""
    I = np.eye(T.shape[0])
    return psd_sqrt(I - T.conj().T @ T), psd_sqrt(I - T @ T.conj().T)


def _check_contraction(T: np.ndarray) -> np.ndarray:
    T = np.asarray(T, dtype=complex)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {T.shape}")
    nrm = np.linalg.norm(T, 2) if T.size else 0.0
    if nrm > 1.0 + CONTRACTION_SLACK:
        raise NotContraction(float(nrm))
    return T


def julia(T: np.ndarray) -> np.ndarray:
    """``[[T, -D_{T*}], [D_T, T*]]``."""
    T = _check_contraction(T)
    D, Ds = defect_operators(T)
    return np.block([[T, -Ds], [D, T.conj().T]])


@dataclass(frozen=True)
class ContractionDilation:
    T: np.ndarray
    N: int
    U: np.ndarray

    @property
    def h(self) -> int:
        return self.T.shape[0]

    def embedding(self) -> np.ndarray:
        """Isometry ``H -> H^{N+1}`` onto the first block."""
        J = np.zeros((self.U.shape[0], self.h), dtype=complex)
        J[:self.h, :self.h] = np.eye(self.h)
        return J

    def compression(self, k: int) -> np.ndarray:
        return np.linalg.matrix_power(self.U, k)[:self.h, :self.h]


def egervary_n_dilation(T: np.ndarray, N: int) -> ContractionDilation:
    if N < 1:
        raise ValueError("N must be at least 1")
    T = _check_contraction(T)
    h = T.shape[0]
    D, Ds = defect_operators(T)
    U = np.zeros(((N + 1) * h, (N + 1) * h), dtype=complex)

    def put(r, c, blk):
        U[r * h:(r + 1) * h, c * h:(c + 1) * h] = blk

    put(0, 0, T)
    put(1, 0, D)
    for c in range(1, N):
        put(c + 1, c, np.eye(h))
    put(0, N, -Ds)
    put(1, N, T.conj().T)
    return ContractionDilation(T, N, U)


@dataclass(frozen=True)
class CompressionReport:
    residuals: tuple[float, ...]       # k = 1 .. N+1
    unitarity_residual: float
    tol: float

    @property
    def boundary_residual(self) -> float:
        return self.residuals[-1]

    @property
    def passed(self) -> bool:
        return self.unitarity_residual <= self.tol and max(self.residuals[:-1]) <= self.tol


def verify_compressions(dil: ContractionDilation, tol: float | None = None) -> CompressionReport:
    """``||P U^k P - T^k||`` for ``k = 1..N+1``; only ``k <= N`` must vanish."""
    if tol is None:
        tol = matrix_tol(dil.U.shape[0])
    res = []
    Uk = np.eye(dil.U.shape[0], dtype=complex)
    Tk = np.eye(dil.h, dtype=complex)
    for _ in range(dil.N + 1):
        Uk = dil.U @ Uk
        Tk = dil.T @ Tk
        res.append(float(np.linalg.norm(Uk[:dil.h, :dil.h] - Tk)))
    unit = float(np.linalg.norm(dil.U.conj().T @ dil.U - np.eye(dil.U.shape[0])))
    return CompressionReport(tuple(res), unit, tol)


def reducing_residual(dil: ContractionDilation) -> float:
    """``||[U, P]||``: zero exactly when ``H`` reduces ``U``."""
    P = np.zeros_like(dil.U)
    P[:dil.h, :dil.h] = np.eye(dil.h)
    return float(np.linalg.norm(dil.U @ P - P @ dil.U))


@dataclass(frozen=True)
class BridgeReport:
    residuals: tuple[float, ...]       # M = 1 .. N
    alpha_unitarity: float
    projection_residual: float
    tol: float

    @property
    def max_residual(self) -> float:
        return max(self.residuals)

    @property
    def passed(self) -> bool:
        return max(self.max_residual, self.alpha_unitarity, self.projection_residual) <= self.tol


def bridge_check(ndil: NDilation, dim_cap: int = DEFAULT_DIM_CAP, tol: float | None = None) -> BridgeReport:
    """``P T_alpha^M P == T_{(q^(M) (x) I) o Phi_N}`` on ``L^2(A (x) B^N)`` for ``M <= N``."""
    big = ndil.big_algebra
    if big.gns_dim > dim_cap:
        raise DimensionCapExceeded(big.gns_dim, dim_cap)
    if tol is None:
        tol = matrix_tol(big.gns_dim)
    factors = ndil.factors

    def lift(fn_dense):
        def fn(X: AlgebraElement) -> AlgebraElement:
            return from_kron_dense(fn_dense(to_kron_dense(X, factors)), factors, atol=np.inf)
        return fn

    T_alpha = representing_matrix_of_map(big, lift(lambda X: alpha_dense(ndil, X, 1)))
    P = representing_matrix_of_map(big, lift(lambda X: phi_N_dense(ndil, X)))
    g = big.gns_dim
    alpha_unit = float(np.linalg.norm(T_alpha.conj().T @ T_alpha - np.eye(g)))
    proj = float(max(np.linalg.norm(P @ P - P), np.linalg.norm(P - P.conj().T)))

    q = ndil.base.channel
    A = ndil.system
    dBN = ndil.environment.concrete_dim ** ndil.N
    res = []
    power = np.eye(g, dtype=complex)
    for M in range(1, ndil.N + 1):
        power = T_alpha @ power

        def target(Xk, M=M):
            reduced = from_kron_dense(partial_trace_env_dense(ndil, Xk), (A,))
            return np.kron(apply_power(q, reduced, M).to_dense(), np.eye(dBN))

        T_target = representing_matrix_of_map(big, lift(target))
        res.append(float(np.linalg.norm(P @ power @ P - T_target)))
    return BridgeReport(tuple(res), alpha_unit, proj, tol)
