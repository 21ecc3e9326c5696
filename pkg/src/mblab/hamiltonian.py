"""Disordered Heisenberg chain with an embedded weak-disorder region.

    H = J sum_{i=1}^{L-1} sigma_i . sigma_{i+1} + sum_i h_i sigma^z_i

with Pauli matrices (sigma^z = +-1) and open boundaries. Fields are
``h_i = W r_i`` outside the thermal region and ``h_i = w r_i`` inside it,
``r_i`` uniform on [-1, 1).

Random numbers come from numpy's PCG64 bit generator seeded directly with the
64-bit realization seed; ``Generator.uniform(-1, 1, L)`` draws the L values in
site order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import SectorBasis, lookup_many, spins


@dataclass(frozen=True)
class ChainSpec:
    """Physical problem definition for one grid point.

    Parameters
    ----------
    L : int
        Number of sites (even).
    P : int
        Size of the weak-disorder (thermal) region, ``0 <= P <= L``.
    W : float
        Disorder strength outside the region.
    w : float
        Disorder strength inside the region.
    J : float
        Exchange coupling.
    """

    L: int
    P: int = 0
    W: float = 0.0
    w: float = 0.5
    J: float = 1.0

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 2 or self.L % 2:
            raise ValueError(f"L must be an even integer >= 2, got {self.L}")
        if int(self.P) != self.P or not 0 <= self.P <= self.L:
            raise ValueError(f"P must satisfy 0 <= P <= L={self.L}, got {self.P}")
        for name in ("W", "w", "J"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.W < 0 or self.w < 0:
            raise ValueError("disorder strengths must be non-negative")

    @property
    def region_start(self) -> int:
        """Number of strongly disordered sites left of the thermal region."""
        return (self.L - self.P) // 2

    @property
    def region(self) -> range:
        """1-based site numbers of the thermal region."""
        s = self.region_start
        return range(s + 1, s + self.P + 1)

    def region_mask(self) -> np.ndarray:
        mask = np.zeros(self.L, dtype=bool)
        mask[self.region_start:self.region_start + self.P] = True
        return mask


@dataclass(frozen=True)
class FieldProfile:
    h: np.ndarray
    r: np.ndarray
    seed: int

    @property
    def L(self) -> int:
        return len(self.h)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))


def sample_fields(spec: ChainSpec, seed: int) -> FieldProfile:
    """Draw the random field profile of one disorder realization."""
    r = make_rng(seed).uniform(-1.0, 1.0, spec.L)
    scale = np.where(spec.region_mask(), spec.w, spec.W)
    return FieldProfile(h=scale * r, r=r, seed=int(seed))


def build_hamiltonian(spec: ChainSpec, fields: FieldProfile, basis: SectorBasis) -> np.ndarray:
    """Dense sector-projected Hamiltonian.

    Diagonal: ``J sum z_i z_{i+1} + sum h_i z_i``. Each exchange of an
    antiparallel neighbor pair contributes an off-diagonal element ``2J``.
    """
    L = spec.L
    if fields.L != L or basis.L != L:
        raise ValueError(
            f"dimension mismatch: spec L={L}, fields L={fields.L}, basis L={basis.L}"
        )
    states = basis.states
    z = spins(states, L)
    d = len(states)

    H = np.zeros((d, d))
    diag = spec.J * np.sum(z[:, :-1] * z[:, 1:], axis=1) + z @ np.asarray(fields.h, float)
    H[np.arange(d), np.arange(d)] = diag

    for i in range(L - 1):
        # bits i and i+1 differ -> swapping them stays in the sector
        rows = np.nonzero(z[:, i] != z[:, i + 1])[0]
        cols = lookup_many(basis, states[rows] ^ (0b11 << i))
        H[rows, cols] = 2.0 * spec.J
    return H
