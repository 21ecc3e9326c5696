"""Zero-magnetization sector of an L-site spin-1/2 chain.

Configurations are integers: bit ``i - 1`` holds site ``i`` (site 1 is the
leftmost site and the least-significant bit), and a set bit means spin up.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

MAX_SITES = 24


class SectorError(ValueError):
    """Raised for invalid sector requests or configurations outside the sector."""


@dataclass(frozen=True)
class SectorBasis:
    """Ascending list of sector configurations with an inverse lookup table.

    Attributes
    ----------
    L : int
        Number of sites.
    states : np.ndarray
        Configurations with exactly ``L // 2`` up spins, sorted ascending.
    """

    L: int
    states: np.ndarray
    index_of: dict = field(repr=False, compare=False)

    @property
    def dim(self) -> int:
        return len(self.states)

    def __len__(self) -> int:
        return len(self.states)


def enumerate_sector(L: int) -> SectorBasis:
    """Build the sigma^z_tot = 0 basis for ``L`` sites.

    Parameters
    ----------
    L : int
        Even chain length, ``2 <= L <= 24``.

    Returns
    -------
    SectorBasis
    """
    if not isinstance(L, (int, np.integer)) or isinstance(L, bool):
        raise SectorError(f"L must be an integer, got {L!r}")
    L = int(L)
    if L % 2:
        raise SectorError(f"zero-magnetization sector undefined for odd L={L}")
    if not 2 <= L <= MAX_SITES:
        raise SectorError(f"L={L} outside supported capacity [2, {MAX_SITES}]")

    # sorted(...) of bitmasks from combinations of site positions
    states = np.array(
        sorted(sum(1 << i for i in up) for up in combinations(range(L), L // 2)),
        dtype=np.int64,
    )
    assert len(states) == comb(L, L // 2)
    index_of = {int(s): k for k, s in enumerate(states)}
    return SectorBasis(L=L, states=states, index_of=index_of)


def lookup(basis: SectorBasis, config: int) -> int:
    """Return the position of ``config`` in ``basis.states``."""
    try:
        return basis.index_of[int(config)]
    except KeyError:
        raise SectorError(
            f"configuration {int(config):0{basis.L}b} is not in the L={basis.L} sector"
        ) from None


def lookup_many(basis: SectorBasis, configs: np.ndarray) -> np.ndarray:
    """Vectorized :func:`lookup` for arrays of configurations."""
    configs = np.asarray(configs, dtype=np.int64)
    idx = np.searchsorted(basis.states, configs)
    idx_clipped = np.minimum(idx, len(basis.states) - 1)
    bad = basis.states[idx_clipped] != configs
    if np.any(bad):
        first = int(configs[np.argmax(bad)])
        raise SectorError(f"configuration {first:0{basis.L}b} is not in the L={basis.L} sector")
    return idx


def spins(states: np.ndarray, L: int) -> np.ndarray:
    """Return the sigma^z eigenvalues (+1/-1) as an array of shape (n, L)."""
    bits = (np.asarray(states, dtype=np.int64)[:, None] >> np.arange(L)) & 1
    return 2 * bits - 1
