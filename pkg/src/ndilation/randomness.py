"""Seeded random matrices: Ginibre elements, Haar unitaries, contractions, channels."""
from __future__ import annotations

import numpy as np

from .algebra import full_algebra
from .factorization import factorization_from_unitary, UnitaryFactorization


def ginibre(n: int, rng: np.random.Generator, m: int | None = None) -> np.ndarray:
    m = n if m is None else m
    return (rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))) / np.sqrt(2)


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """QR of a Ginibre matrix with the phases of ``diag(R)`` absorbed into ``Q``."""
    q, r = np.linalg.qr(ginibre(n, rng))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_contraction(n: int, rng: np.random.Generator, shrink: float | None = None) -> np.ndarray:
    """Ginibre matrix scaled to operator norm ``shrink`` (uniform in (0.05, 1) by default)."""
    G = ginibre(n, rng)
    if shrink is None:
        shrink = rng.uniform(0.05, 1.0)
    return G * (shrink / np.linalg.norm(G, 2))


def random_factorized_channel(n: int, m: int, rng: np.random.Generator) -> UnitaryFactorization:
    """Channel on ``M_n`` read off a Haar unitary on ``C^n (x) C^m``."""
    return factorization_from_unitary(haar_unitary(n * m, rng), full_algebra(n), full_algebra(m))


def random_real_correlation(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Gram matrix of ``n`` random unit vectors in ``R^rank``."""
    rank = n if rank is None else rank
    G = rng.standard_normal((rank, n))
    G /= np.linalg.norm(G, axis=0)
    C = G.T @ G
    np.fill_diagonal(C, 1.0)
    return C
