"""Unital quantum channels in Kraus form."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .algebra import (
    AlgebraElement,
    AlgebraError,
    MatrixAlgebra,
    element,
    from_dense,
    full_algebra,
    identity,
    matrix_from_json,
    matrix_units,
    matrix_to_json,
    matrix_tol,
    algebra_from_json,
)

RANK_RTOL = 1e-8


class ChannelError(ValueError):
    """A Kraus set failing one of the unital / trace-preserving / CP conditions."""

    def __init__(self, code: str, message: str, residuals: dict | None = None):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.residuals = residuals or {}


class NotEquivalent(ValueError):
    def __init__(self, choi_residual: float):
        super().__init__(f"NOT_EQUIVALENT: Choi residual {choi_residual:.3e}")
        self.code = "NOT_EQUIVALENT"
        self.choi_residual = choi_residual


@dataclass(frozen=True)
class ValidationReport:
    unital_residual: float
    tp_residual: float
    min_choi_eigenvalue: float
    tol: float

    @property
    def unital(self) -> bool:
        return self.unital_residual <= self.tol

    @property
    def trace_preserving(self) -> bool:
        return self.tp_residual <= self.tol

    @property
    def completely_positive(self) -> bool:
        return self.min_choi_eigenvalue >= -self.tol

    @property
    def valid(self) -> bool:
        return self.unital and self.trace_preserving and self.completely_positive


@dataclass(frozen=True, eq=False)
class Channel:
    """``q(X) = sum_k q_k X q_k*`` on ``domain``.

    Use :func:`make_channel` to build a validated instance.
    """

    domain: MatrixAlgebra
    kraus: tuple[AlgebraElement, ...]
    report: ValidationReport | None = field(default=None, compare=False, repr=False)

    @property
    def num_kraus(self) -> int:
        return len(self.kraus)

    def __call__(self, X: AlgebraElement) -> AlgebraElement:
        return apply(self, X)

    def dense_kraus(self) -> list[np.ndarray]:
        return [k.to_dense() for k in self.kraus]


def _as_elements(domain: MatrixAlgebra, kraus) -> tuple[AlgebraElement, ...]:
    out = []
    for k in kraus:
        if isinstance(k, AlgebraElement):
            if k.algebra != domain:
                raise AlgebraError("Kraus operator belongs to a different algebra")
            out.append(k)
        else:
            k = np.asarray(k, dtype=complex)
            if domain.is_full:
                out.append(element(domain, k))
            else:
                out.append(from_dense(domain, k))
    return tuple(out)


def validate_kraus(domain: MatrixAlgebra, kraus: Sequence[AlgebraElement],
                   tol: float | None = None) -> ValidationReport:
    if tol is None:
        tol = matrix_tol(domain.concrete_dim)
    I = identity(domain)
    sum_qq = sum((k @ k.H for k in kraus[1:]), kraus[0] @ kraus[0].H)
    sum_qtq = sum((k.H @ k for k in kraus[1:]), kraus[0].H @ kraus[0])
    choi = _choi_from_dense([k.to_dense() for k in kraus])
    lam_min = float(np.linalg.eigvalsh(choi).min())
    return ValidationReport((sum_qq - I).norm(), (sum_qtq - I).norm(), lam_min, tol)


def make_channel(domain: MatrixAlgebra, kraus, tol: float | None = None) -> Channel:
    """Validated channel. Raises :class:`ChannelError` on the first violated condition."""
    kraus = _as_elements(domain, kraus)
    if not kraus:
        raise ChannelError("EMPTY_KRAUS", "a channel needs at least one Kraus operator")
    rep = validate_kraus(domain, kraus, tol)
    residuals = {"unital": rep.unital_residual, "trace_preserving": rep.tp_residual,
                 "min_choi_eigenvalue": rep.min_choi_eigenvalue}
    if not rep.unital:
        raise ChannelError("UNITAL_VIOLATION",
                           f"||sum q q* - I|| = {rep.unital_residual:.3e}", residuals)
    if not rep.trace_preserving:
        raise ChannelError("TP_VIOLATION",
                           f"||sum q* q - I|| = {rep.tp_residual:.3e}", residuals)
    if not rep.completely_positive:
        raise ChannelError("CP_VIOLATION",
                           f"Choi eigenvalue {rep.min_choi_eigenvalue:.3e}", residuals)
    return Channel(domain, kraus, rep)


def identity_channel(domain: MatrixAlgebra) -> Channel:
    return make_channel(domain, [identity(domain)])


def unitary_channel(V: np.ndarray) -> Channel:
    """``Ad_V`` on the full matrix algebra."""
    V = np.asarray(V, dtype=complex)
    return make_channel(full_algebra(V.shape[0]), [V])


def apply(ch: Channel, X: AlgebraElement) -> AlgebraElement:
    if X.algebra != ch.domain:
        raise AlgebraError(f"element of {X.algebra!r} passed to a channel on {ch.domain!r}")
    out = None
    for k in ch.kraus:
        term = k @ X @ k.H
        out = term if out is None else out + term
    return out


def apply_power(ch: Channel, X: AlgebraElement, M: int) -> AlgebraElement:
    if M < 0:
        raise ValueError("power must be non-negative")
    for _ in range(M):
        X = apply(ch, X)
    return X


def dual(ch: Channel) -> Channel:
    """Tracial dual, Kraus set ``{q_k*}``."""
    return Channel(ch.domain, tuple(k.H for k in ch.kraus), ch.report)


def compose(ch2: Channel, ch1: Channel) -> Channel:
    """``ch2 o ch1`` reduced to a minimal Kraus set."""
    if ch1.domain != ch2.domain:
        raise AlgebraError("cannot compose channels on different algebras")
    kraus = tuple(b @ a for b in ch2.kraus for a in ch1.kraus)
    return minimal_kraus(Channel(ch1.domain, kraus))


def convex_combination(channels: Sequence[Channel], probs: Sequence[float]) -> Channel:
    dom = channels[0].domain
    kraus = tuple(np.sqrt(p) * k for ch, p in zip(channels, probs) for k in ch.kraus)
    return make_channel(dom, kraus)


# ---------------------------------------------------------------------------
# Choi matrices


def _choi_from_dense(kraus: Sequence[np.ndarray]) -> np.ndarray:
    # C = sum_ij E_ij (x) q(E_ij) = sum_k v_k v_k*, v_k[i*d + a] = q_k[a, i]
    d = kraus[0].shape[0]
    V = np.stack([k.T.reshape(d * d) for k in kraus], axis=1)
    return V @ V.conj().T


def choi_matrix(ch: Channel) -> np.ndarray:
    """``sum_ij E_ij (x) q(E_ij)`` over the matrix units of the enveloping ``C^{d x d}``."""
    return _choi_from_dense(ch.dense_kraus())


def choi_of_map(d: int, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Choi matrix of an arbitrary linear map on ``C^{d x d}``."""
    C = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            E = np.zeros((d, d), dtype=complex)
            E[i, j] = 1.0
            C[i * d:(i + 1) * d, j * d:(j + 1) * d] = fn(E)
    return C


def transpose_map(X: np.ndarray) -> np.ndarray:
    """The transpose, a positive but not completely positive linear map."""
    return np.asarray(X).T


def choi_distance(ch1: Channel, ch2: Channel) -> float:
    return float(np.linalg.norm(choi_matrix(ch1) - choi_matrix(ch2)))


def channels_equal(ch1: Channel, ch2: Channel, atol: float | None = None) -> bool:
    if ch1.domain != ch2.domain:
        return False
    if atol is None:
        atol = matrix_tol(ch1.domain.concrete_dim ** 2)
    return choi_distance(ch1, ch2) <= atol


def minimal_kraus(ch: Channel, rtol: float = RANK_RTOL) -> Channel:
    """Kraus set of size ``rank(Choi)`` from the Choi eigendecomposition."""
    C = choi_matrix(ch)
    d = ch.domain.concrete_dim
    lam, vecs = np.linalg.eigh(C)
    keep = lam > rtol * max(lam.max(), 0.0)
    kraus = []
    for l, v in zip(lam[keep][::-1], vecs[:, keep].T[::-1]):
        K = np.sqrt(l) * v.reshape(d, d).T
        kraus.append(element(ch.domain, K) if ch.domain.is_full else from_dense(ch.domain, K))
    return Channel(ch.domain, tuple(kraus), ch.report)


@dataclass(frozen=True)
class KrausEquivalence:
    mixing: np.ndarray
    unitarity_residual: float
    fit_residual: float


def kraus_equivalence(set1: Sequence, set2: Sequence, domain: MatrixAlgebra | None = None,
                      atol: float | None = None) -> KrausEquivalence:
    """Unitary ``W`` with ``q2_j = sum_k W[j, k] q1_k`` (shorter set padded with zeros).

    ``W`` is the unitary least-squares (Procrustes) fit of the stacked sets.
    Raises :class:`NotEquivalent` when the Choi matrices differ.
    """
    dense1 = [k.to_dense() if isinstance(k, AlgebraElement) else np.asarray(k, dtype=complex)
              for k in set1]
    dense2 = [k.to_dense() if isinstance(k, AlgebraElement) else np.asarray(k, dtype=complex)
              for k in set2]
    d = dense1[0].shape[0]
    if atol is None:
        atol = matrix_tol(d * d)
    resid = float(np.linalg.norm(_choi_from_dense(dense1) - _choi_from_dense(dense2)))
    if resid > atol:
        raise NotEquivalent(resid)
    m = max(len(dense1), len(dense2))
    zero = np.zeros((d, d), dtype=complex)
    Q1 = np.stack([k.ravel() for k in dense1] + [zero.ravel()] * (m - len(dense1)), axis=1)
    Q2 = np.stack([k.ravel() for k in dense2] + [zero.ravel()] * (m - len(dense2)), axis=1)
    # minimize ||Q1 W^T - Q2|| over unitary W
    u, _, vh = np.linalg.svd(Q1.conj().T @ Q2)
    W = (u @ vh).T
    fit = float(np.linalg.norm(Q1 @ W.T - Q2))
    unit = float(np.linalg.norm(W.conj().T @ W - np.eye(m)))
    return KrausEquivalence(W, unit, fit)


# ---------------------------------------------------------------------------
# channel-level predicates


def is_multiplicative(ch: Channel, atol: float | None = None) -> bool:
    """``q(XY) == q(X) q(Y)`` on all pairs of matrix units (a *-homomorphism)."""
    if atol is None:
        atol = matrix_tol(ch.domain.concrete_dim)
    units = matrix_units(ch.domain)
    images = [apply(ch, E) for E in units]
    for E, qE in zip(units, images):
        for F, qF in zip(units, images):
            if (apply(ch, E @ F) - qE @ qF).norm() > atol:
                return False
    return True


def is_conditional_expectation(ch: Channel, atol: float | None = None) -> bool:
    """``q o q == q`` and ``q == q_dagger`` at the Choi level."""
    if atol is None:
        atol = matrix_tol(ch.domain.concrete_dim ** 2)
    return bool(choi_distance(compose(ch, ch), ch) <= atol
                and choi_distance(dual(ch), ch) <= atol)


def channel_to_json(ch: Channel) -> dict:
    return {"algebra": ch.domain.to_json(),
            "kraus": [matrix_to_json(k.to_dense()) for k in ch.kraus]}


def channel_from_json(data: dict) -> Channel:
    alg = algebra_from_json(data["algebra"])
    return make_channel(alg, [matrix_from_json(k) for k in data["kraus"]])
