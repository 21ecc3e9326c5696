"""Bipartite von Neumann entropy and the Page normalizer.

Subsystem A is always the leftmost ``LA`` sites, i.e. the low ``LA`` bits of a
configuration; B holds the remaining high bits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

EIG_CUTOFF = 1e-12
NEG_TOLERANCE = 1e-10
NORM_TOLERANCE = 1e-8


class Cut(str, Enum):
    MID = "MID"
    MBL = "MBL"


class EntropyError(ArithmeticError):
    """Reduced density matrix has a significantly negative eigenvalue."""


@dataclass(frozen=True)
class Bipartition:
    kind: Cut
    LA: int
    L: int

    def __post_init__(self):
        if not 1 <= self.LA <= self.L - 1:
            raise ValueError(f"{self.kind.value} cut needs 1 <= LA <= L-1, got LA={self.LA}, L={self.L}")

    @property
    def LB(self) -> int:
        return self.L - self.LA

    @classmethod
    def mid(cls, L: int) -> "Bipartition":
        return cls(Cut.MID, L // 2, L)

    @classmethod
    def mbl(cls, L: int, P: int) -> "Bipartition":
        """Strongly disordered block left of the thermal region versus the rest."""
        return cls(Cut.MBL, (L - P) // 2, L)

    def page(self) -> float:
        return page_entropy(2 ** self.LA, 2 ** self.LB)


def amplitude_matrix(states, configs: np.ndarray, LA: int, L: int) -> np.ndarray:
    """Reshape amplitudes into ``G[..., a, b]`` indexed by A- and B-configurations.

    ``states`` may be one vector of shape (d,) or a stack of shape (d, n); in
    the latter case the result has shape (n, 2**LA, 2**(L-LA)).
    """
    states = np.asarray(states)
    configs = np.asarray(configs, dtype=np.int64)
    a = configs & ((1 << LA) - 1)
    b = configs >> LA
    if states.ndim == 1:
        G = np.zeros((1 << LA, 1 << (L - LA)), dtype=states.dtype)
        G[a, b] = states
    else:
        G = np.zeros((states.shape[1], 1 << LA, 1 << (L - LA)), dtype=states.dtype)
        G[:, a, b] = states.T
    return G


def _check_normalized(state: np.ndarray):
    norm = np.linalg.norm(state)
    if abs(norm - 1.0) > NORM_TOLERANCE:
        raise ValueError(f"state is not normalized (norm={norm:.12g})")


def reduced_density_matrix(state, basis, part: Bipartition) -> np.ndarray:
    """``rho_A = Tr_B |psi><psi|`` as a dense ``2**LA x 2**LA`` matrix.

    ``basis`` is anything with ``states`` (configuration integers aligned with
    the amplitudes) and ``L``; pass :func:`full_space` for unrestricted states.
    """
    state = np.asarray(state)
    _check_normalized(state)
    if basis.L != part.L:
        raise ValueError(f"basis L={basis.L} does not match partition L={part.L}")
    G = amplitude_matrix(state, basis.states, part.LA, part.L)
    return G @ G.conj().T


def _entropy_from_eigs(lam: np.ndarray) -> np.ndarray:
    lam_min = lam.min(axis=-1)
    if np.any(lam_min < -NEG_TOLERANCE):
        raise EntropyError(f"negative density-matrix eigenvalue {lam_min.min():.3e}")
    safe = np.where(lam > EIG_CUTOFF, lam, 1.0)
    return -np.sum(np.where(lam > EIG_CUTOFF, lam * np.log(safe), 0.0), axis=-1)


def entropy(rho: np.ndarray) -> float:
    """Von Neumann entropy in nats, dropping eigenvalues below 1e-12."""
    return float(_entropy_from_eigs(np.linalg.eigvalsh(rho)))


def entropies(vectors: np.ndarray, basis, part: Bipartition) -> np.ndarray:
    """Entanglement entropy of every column of ``vectors`` for one cut.

    Diagonalizes whichever of ``G G^H`` and ``G^H G`` is smaller; both carry the
    same nonzero spectrum.
    """
    vectors = np.asarray(vectors)
    if vectors.ndim == 1:
        vectors = vectors[:, None]
    norms = np.linalg.norm(vectors, axis=0)
    if np.any(np.abs(norms - 1.0) > NORM_TOLERANCE):
        raise ValueError("state is not normalized")
    G = amplitude_matrix(vectors, basis.states, part.LA, part.L)
    Gh = np.conj(np.swapaxes(G, -1, -2))
    rho = G @ Gh if part.LA <= part.LB else Gh @ G
    return _entropy_from_eigs(np.linalg.eigvalsh(rho))


@lru_cache(maxsize=None)
def page_entropy(dimA: int, dimB: int) -> float:
    """Mean entanglement entropy of a random pure state on ``dimA x dimB``.

    ``sum_{k=dB+1}^{dA dB} 1/k - (dA - 1) / (2 dB)`` with ``dA <= dB``.
    """
    dimA, dimB = int(dimA), int(dimB)
    if dimA < 1 or dimB < 1:
        raise ValueError(f"dimensions must be positive, got ({dimA}, {dimB})")
    if dimA > dimB:
        dimA, dimB = dimB, dimA
    harmonic = math.fsum(1.0 / np.arange(dimB + 1, dimA * dimB + 1, dtype=float))
    return harmonic - (dimA - 1) / (2 * dimB)


@dataclass(frozen=True)
class FullSpace:
    """Unrestricted computational basis, usable wherever a basis is expected."""

    L: int

    @property
    def states(self) -> np.ndarray:
        return np.arange(1 << self.L, dtype=np.int64)


def full_space(L: int) -> FullSpace:
    return FullSpace(L)
