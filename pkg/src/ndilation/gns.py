"""Representing contractions ``T_q`` of channels on the GNS space ``L^2(A, tr)``.

Matrices are taken in the orthonormal basis ``E_k / sqrt(w_i / n_i)`` of
matrix units (block order, row-major inside a block). Within one block this
is a uniform rescaling of the canonical basis, so for a full matrix algebra
the matrices coincide with the canonical-basis ones, e.g.
``[T_q] = sum_k q_k (x) conj(q_k)``.
"""
from __future__ import annotations

import enum
import itertools
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .algebra import (
    AlgebraElement,
    MatrixAlgebra,
    adjoint_permutation,
    from_gns_vector,
    full_algebra,
    to_gns_vector,
)
from .channel import Channel, apply, apply_power, compose, is_conditional_expectation, is_multiplicative

UNIT_SV_TOL = 1e-8
WARN_SV_TOL = 1e-6
CONTRACTION_SLACK = 1e-12
CLASSIFY_TOL = 1e-8


class SpectralGapWarning(UserWarning):
    """A singular value sits in the ambiguous band just below 1."""


class MultiplicativeDomainMismatch(RuntimeError):
    pass


class NonConverged(RuntimeError):
    def __init__(self, message: str, partial):
        super().__init__(f"NON_CONVERGED: {message}")
        self.partial = partial


@dataclass(frozen=True, eq=False)
class RepContraction:
    matrix: np.ndarray
    algebra: MatrixAlgebra
    source: Channel | None = None
    normalized: bool = True

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def metadata(self) -> dict:
        return {"basis": "canonical-row-major", "normalized": self.normalized}


def representing_matrix_of_map(alg: MatrixAlgebra,
                               fn: Callable[[AlgebraElement], AlgebraElement]) -> np.ndarray:
    """Column-by-column matrix of a linear map on ``L^2(alg)``."""
    cols = []
    for v in np.eye(alg.gns_dim, dtype=complex):
        cols.append(to_gns_vector(fn(from_gns_vector(alg, v))))
    return np.stack(cols, axis=1)


def kronecker_representing_matrix(ch: Channel) -> np.ndarray:
    """``sum_k q_k (x) conj(q_k)``; full matrix algebras only."""
    if not ch.domain.is_full:
        raise ValueError("the Kronecker formula needs a single full block")
    return sum(np.kron(k.blocks[0], k.blocks[0].conj()) for k in ch.kraus)


def representing_matrix(ch: Channel, method: str = "columns") -> RepContraction:
    if method == "kronecker":
        M = kronecker_representing_matrix(ch)
    elif method == "columns":
        M = representing_matrix_of_map(ch.domain, lambda X: apply(ch, X))
    else:
        raise ValueError(f"unknown method {method!r}")
    return RepContraction(M, ch.domain, ch)


def left_mult_matrix(B: np.ndarray) -> np.ndarray:
    """``[L_B] = B (x) I`` on ``L^2(M_n)``."""
    B = np.asarray(B)
    return np.kron(B, np.eye(B.shape[0]))


def right_mult_matrix(B: np.ndarray) -> np.ndarray:
    """``[R_B] = I (x) B^T`` on ``L^2(M_n)``."""
    B = np.asarray(B)
    return np.kron(np.eye(B.shape[0]), B.T)


def swap_matrix(n: int) -> np.ndarray:
    """Tensor swap on ``C^n (x) C^n``; the representing matrix of the transpose."""
    S = np.zeros((n * n, n * n))
    S[np.arange(n * n), np.arange(n * n).reshape(n, n).T.ravel()] = 1.0
    return S


def conjugation_apply(n: int, vec: np.ndarray) -> np.ndarray:
    """Anti-linear conjugation ``C = S o cc``: sends ``vec(A)`` to ``vec(A*)``."""
    return swap_matrix(n) @ np.conj(vec)


def check_conjugation_commutes(T: RepContraction | np.ndarray, alg: MatrixAlgebra | None = None) -> float:
    """``||C T - T C||`` over the basis, i.e. ``||P conj(T) - T P||`` with ``P`` the adjoint permutation."""
    if isinstance(T, RepContraction):
        alg, M = T.algebra, T.matrix
    else:
        M = np.asarray(T)
        if alg is None:
            alg = full_algebra(int(round(np.sqrt(M.shape[0]))))
    perm = adjoint_permutation(alg)
    # (C T) e_k = conj(T e_k)[perm];  (T C) e_k = T e_{perm^-1(k)}
    CT = np.conj(M)[perm, :]
    TC = M[:, np.argsort(perm)]
    return float(np.linalg.norm(CT - TC))


class Kind(enum.Enum):
    UNITARY = "UNITARY"
    PROJECTION = "PROJECTION"
    PARTIAL_ISOMETRY = "PARTIAL_ISOMETRY"
    GENERIC_CONTRACTION = "GENERIC_CONTRACTION"


def classify(T: RepContraction | np.ndarray, tol: float = CLASSIFY_TOL) -> Kind:
    M = T.matrix if isinstance(T, RepContraction) else np.asarray(T)
    I = np.eye(M.shape[0])
    if np.linalg.norm(M.conj().T @ M - I, 2) <= tol:
        return Kind.UNITARY
    if np.linalg.norm(M @ M - M, 2) <= tol and np.linalg.norm(M - M.conj().T, 2) <= tol:
        return Kind.PROJECTION
    s = np.linalg.svd(M, compute_uv=False)
    if np.all(np.minimum(np.abs(s), np.abs(s - 1.0)) <= tol):
        return Kind.PARTIAL_ISOMETRY
    return Kind.GENERIC_CONTRACTION


@dataclass(frozen=True)
class ChannelClassification:
    kind: Kind
    automorphism: bool
    conditional_expectation: bool
    factors_through_mult: bool
    is_identity: bool = False

    @property
    def consistent(self) -> bool:
        if (self.kind is Kind.UNITARY) != self.automorphism:
            return False
        # the identity map is the one unitary projection
        projection = self.kind is Kind.PROJECTION or (self.kind is Kind.UNITARY and self.is_identity)
        if projection != self.conditional_expectation:
            return False
        partial = self.kind in (Kind.UNITARY, Kind.PROJECTION, Kind.PARTIAL_ISOMETRY)
        return partial == self.factors_through_mult


def classify_channel(ch: Channel) -> ChannelClassification:
    """Spectral classification of ``T_q`` next to the channel-level predicates.

    ``factors_through_mult``: ``q`` vanishes on the orthocomplement of its
    multiplicative domain, so ``q = q o Phi_Mult`` with ``q`` a *-monomorphism
    on ``Mult(q)``.
    """
    T = representing_matrix(ch)
    basis = schwarz_multiplicative_domain(ch)
    P = basis @ basis.conj().T
    resid = np.linalg.norm(T.matrix @ (np.eye(T.dim) - P), 2)
    is_id = bool(np.linalg.norm(T.matrix - np.eye(T.dim), 2) <= CLASSIFY_TOL)
    return ChannelClassification(classify(T), is_multiplicative(ch),
                                 is_conditional_expectation(ch), bool(resid <= CLASSIFY_TOL), is_id)


@dataclass(frozen=True)
class SplitParts:
    V: np.ndarray
    C_strict: np.ndarray
    rank_one_space: np.ndarray     # orthonormal columns: ker(V)^perp
    range_space: np.ndarray        # orthonormal columns: ran(V)
    singular_values: np.ndarray

    @property
    def rank(self) -> int:
        return self.rank_one_space.shape[1]


def isometric_split(T: RepContraction | np.ndarray) -> SplitParts:
    """``T = V + C`` with ``V`` the partial isometry on singular values equal to 1."""
    M = T.matrix if isinstance(T, RepContraction) else np.asarray(T)
    W, s, Yh = np.linalg.svd(M)
    if s.max(initial=0.0) > 1.0 + CONTRACTION_SLACK:
        raise ValueError(f"NOT_CONTRACTION: largest singular value {s.max():.16g}")
    unit = s >= 1.0 - UNIT_SV_TOL
    band = (s > 1.0 - WARN_SV_TOL) & ~unit
    if band.any():
        warnings.warn(f"SPECTRAL_GAP_WARNING: singular values {s[band]} lie in "
                      f"(1 - {WARN_SV_TOL:g}, 1 - {UNIT_SV_TOL:g})", SpectralGapWarning, stacklevel=2)
    V = W[:, unit] @ Yh[unit, :]
    C = W[:, ~unit] @ np.diag(s[~unit]) @ Yh[~unit, :]
    return SplitParts(V, C, Yh[unit, :].conj().T, W[:, unit], s)


def defect_indices(T: RepContraction | np.ndarray) -> tuple[int, int]:
    """``(dim ker V, dim ran(V)^perp)``; always equal in finite dimension."""
    parts = isometric_split(T)
    g = parts.V.shape[0]
    ker = g - parts.rank
    coker = g - parts.range_space.shape[1]
    if ker != coker:
        raise AssertionError(f"unequal defect indices {ker} != {coker}")
    return ker, coker


def unital_subalgebra_dims(n: int) -> set[int]:
    """Dimensions of unital *-subalgebras of ``M_n``: ``sum k_i^2`` over ``sum k_i r_i = n``."""
    dims = set()

    def rec(remaining, min_k, acc):
        if remaining == 0:
            dims.add(acc)
            return
        for k in range(min_k, remaining + 1):
            for r in range(1, remaining // k + 1):
                rec(remaining - k * r, k, acc + k * k)

    rec(n, 1, 0)
    return dims


def _null_space(M: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
    if M.size == 0:
        return np.eye(M.shape[1], dtype=complex)
    _, s, vh = np.linalg.svd(M)
    scale = max(s.max(initial=0.0), 1.0)
    rank = int(np.sum(s > rtol * scale))
    return vh[rank:].conj().T


def schwarz_multiplicative_domain(ch: Channel) -> np.ndarray:
    """Orthonormal GNS-coordinate basis of ``Mult(q)`` from the linear Schwarz-equality conditions.

    ``q(A*A) = q(A)* q(A)`` holds exactly when ``A q_k* = q_k* q(A)`` for all
    ``k`` and ``q(AA*) = q(A) q(A)*`` exactly when ``q_k A = q(A) q_k``; both are
    linear in ``A``.
    """
    alg = ch.domain
    rows = []
    for v in np.eye(alg.gns_dim, dtype=complex):
        A = from_gns_vector(alg, v)
        qA = apply(ch, A)
        parts = []
        for k in ch.kraus:
            parts.append(to_gns_vector(A @ k.H - k.H @ qA))
            parts.append(to_gns_vector(k @ A - qA @ k))
        rows.append(np.concatenate(parts))
    L = np.stack(rows, axis=1)
    return _null_space(L)


@dataclass(frozen=True)
class MultDomain:
    basis: np.ndarray
    spectral_basis: np.ndarray
    max_angle: float
    closure_residual: float

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def elements(self, alg: MatrixAlgebra) -> list[AlgebraElement]:
        return [from_gns_vector(alg, v) for v in self.basis.T]


def _angle(B1: np.ndarray, B2: np.ndarray) -> float:
    if B1.shape[1] == 0 and B2.shape[1] == 0:
        return 0.0
    if B1.shape[1] != B2.shape[1]:
        return float(np.pi / 2)
    return float(np.max(scipy.linalg.subspace_angles(B1, B2)))


def _closure_residual(alg: MatrixAlgebra, basis: np.ndarray) -> float:
    """How far span(basis) is from being closed under products and adjoints."""
    P = basis @ basis.conj().T
    perm = adjoint_permutation(alg)
    elems = [from_gns_vector(alg, v) for v in basis.T]
    worst = 0.0
    for v in basis.T:
        adj = np.conj(v)[perm]
        worst = max(worst, np.linalg.norm(adj - P @ adj))
    for X, Y in itertools.product(elems, repeat=2):
        w = to_gns_vector(X @ Y)
        worst = max(worst, np.linalg.norm(w - P @ w))
    return float(worst)


def multiplicative_domain(ch: Channel, angle_tol: float = 1e-6) -> MultDomain:
    """``Mult(q)`` computed directly and as ``ker(V)^perp``; raises on disagreement."""
    direct = schwarz_multiplicative_domain(ch)
    spectral = isometric_split(representing_matrix(ch)).rank_one_space
    if direct.shape[1] != spectral.shape[1]:
        raise MultiplicativeDomainMismatch(
            f"MISMATCH: Schwarz dimension {direct.shape[1]} vs spectral {spectral.shape[1]}")
    angle = _angle(direct, spectral)
    if angle > angle_tol:
        raise MultiplicativeDomainMismatch(f"MISMATCH: subspace angle {angle:.3e}")
    return MultDomain(direct, spectral, angle, _closure_residual(ch.domain, direct))


def _intersect(B1: np.ndarray, B2: np.ndarray) -> np.ndarray:
    if B1.shape[1] == 0 or B2.shape[1] == 0:
        return np.zeros((B1.shape[0], 0), dtype=complex)
    ns = _null_space(np.hstack([B1, -B2]), rtol=1e-8)
    if ns.shape[1] == 0:
        return np.zeros((B1.shape[0], 0), dtype=complex)
    vecs = B1 @ ns[:B1.shape[1]]
    q, r = np.linalg.qr(vecs)
    return q[:, :np.linalg.matrix_rank(vecs, tol=1e-8)]


@dataclass(frozen=True)
class StableDomain:
    basis: np.ndarray
    iterations: int
    dims: tuple[int, ...]
    converged: bool
    closed_form: np.ndarray
    agrees: bool
    max_angle: float

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def stable_multiplicative_domain(ch: Channel, max_power: int | None = None,
                                 strict: bool = True) -> StableDomain:
    """Intersection of ``Mult(q^(k))`` over ``k``, iterated until it stops shrinking.

    The closed-form candidate ``ker(V)^perp  cap  ran(V)`` is reported next to it;
    the iterated result is authoritative.
    """
    if max_power is None:
        max_power = 2 * ch.domain.gns_dim
    current = schwarz_multiplicative_domain(ch)
    dims = [current.shape[1]]
    power = ch
    converged = False
    k = 1
    while k < max_power:
        k += 1
        power = compose(ch, power)
        nxt = _intersect(current, schwarz_multiplicative_domain(power))
        dims.append(nxt.shape[1])
        if nxt.shape[1] == current.shape[1]:
            current = nxt
            converged = True
            break
        current = nxt
    parts = isometric_split(representing_matrix(ch))
    closed = _intersect(parts.rank_one_space, parts.range_space)
    angle = _angle(current, closed)
    result = StableDomain(current, k, tuple(dims), converged, closed,
                          bool(closed.shape[1] == current.shape[1] and angle <= 1e-6), angle)
    if not converged and strict:
        raise NonConverged(f"still shrinking after {max_power} powers: dims {dims}", result)
    return result


@dataclass(frozen=True)
class KernelCheck:
    kernel_residual: float
    cokernel_residual: float
    range_residual: float
    range_complement_residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.kernel_residual, self.cokernel_residual,
                   self.range_residual, self.range_complement_residual) <= self.tol


def _adjoint_closed_residual(alg: MatrixAlgebra, basis: np.ndarray) -> float:
    if basis.shape[1] == 0:
        return 0.0
    P = basis @ basis.conj().T
    perm = adjoint_permutation(alg)
    return float(max(np.linalg.norm(np.conj(v)[perm] - P @ np.conj(v)[perm]) for v in basis.T))


def kernel_selfadjointness_check(ch: Channel, tol: float = 1e-8) -> KernelCheck:
    """Adjoint-closure of ``ker T``, ``(ker T)^perp``, ``ran T`` and ``(ran T)^perp``."""
    M = representing_matrix(ch).matrix
    W, s, Yh = np.linalg.svd(M)
    rank = int(np.sum(s > tol * max(s.max(), 1.0)))
    ker, coker = Yh[rank:].conj().T, Yh[:rank].conj().T
    ran, ran_perp = W[:, :rank], W[:, rank:]
    alg = ch.domain
    return KernelCheck(_adjoint_closed_residual(alg, ker), _adjoint_closed_residual(alg, coker),
                       _adjoint_closed_residual(alg, ran), _adjoint_closed_residual(alg, ran_perp), tol)


def power_representing_matrix(ch: Channel, M: int) -> np.ndarray:
    """Column-evaluated matrix of ``q^(M)``."""
    return representing_matrix_of_map(ch.domain, lambda X: apply_power(ch, X, M))
