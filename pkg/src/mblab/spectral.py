"""Full diagonalization, normalized spectrum and gap-ratio statistics."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

# Reference values of the mean gap ratio
GOE_MEAN_R = 0.5307
POISSON_MEAN_R = 0.3863


class SpectralError(RuntimeError):
    """Eigensolver failure; carries the realization seed when known."""

    def __init__(self, message, seed=None):
        super().__init__(message if seed is None else f"{message} (seed={seed})")
        self.seed = seed


@dataclass(frozen=True)
class EigenSolution:
    energies: np.ndarray
    vectors: np.ndarray
    epsilon: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.energies)


@dataclass(frozen=True)
class MidSpectrumWindow:
    start: int
    stop: int
    n_target: int = 50

    @property
    def indices(self) -> range:
        return range(self.start, self.stop)

    def __len__(self) -> int:
        return self.stop - self.start


def normalized_energies(energies: np.ndarray) -> np.ndarray:
    e_min, e_max = energies[0], energies[-1]
    if not e_max > e_min:
        raise SpectralError("flat spectrum: normalized energies undefined")
    eps = (energies - e_min) / (e_max - e_min)
    eps[0], eps[-1] = 0.0, 1.0
    return eps


def diagonalize(H: np.ndarray, seed: Optional[int] = None) -> EigenSolution:
    """Full eigendecomposition of a real symmetric (or Hermitian) matrix.

    Energies are returned ascending with eigenvectors as columns.
    """
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1] or H.shape[0] < 2:
        raise ValueError(f"expected a square matrix of size >= 2, got shape {H.shape}")
    if not np.array_equal(H, H.conj().T):
        raise ValueError("matrix is not symmetric")
    try:
        energies, vectors = scipy.linalg.eigh(H, driver="evd", check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SpectralError(f"eigensolver failed: {exc}", seed=seed) from exc
    return EigenSolution(energies=energies, vectors=vectors, epsilon=normalized_energies(energies))


def mid_window(sol: EigenSolution, n_target: int = 50) -> MidSpectrumWindow:
    """Contiguous block of interior levels closest to epsilon = 0.5.

    The block has ``min(n_target, d - 2)`` levels, never contains the lowest or
    highest level, and minimizes ``sum |eps_k - 0.5|``; ties go to the lower
    block.
    """
    d = sol.dim
    if d < 4:
        raise ValueError(f"mid-spectrum window needs d >= 4, got d={d}")
    if n_target < 1:
        raise ValueError("n_target must be positive")
    n = min(n_target, d - 2)
    dist = np.abs(sol.epsilon[1:d - 1] - 0.5)
    costs = np.lib.stride_tricks.sliding_window_view(dist, n).sum(axis=1)
    start = 1 + int(np.argmin(costs))
    return MidSpectrumWindow(start=start, stop=start + n, n_target=n_target)


def ratios_from_gaps(gaps: np.ndarray) -> np.ndarray:
    """Consecutive-gap ratios ``min(d_k, d_{k+1}) / max(d_k, d_{k+1})``.

    A pair with one zero gap gives 0; a pair of zero gaps is dropped.
    """
    gaps = np.asarray(gaps, dtype=float)
    lo = np.minimum(gaps[:-1], gaps[1:])
    hi = np.maximum(gaps[:-1], gaps[1:])
    keep = hi > 0
    return lo[keep] / hi[keep]


def gap_ratios(sol: EigenSolution, win: MidSpectrumWindow) -> np.ndarray:
    """Gap ratios for every level of the window.

    Each level ``k`` uses its two adjacent gaps, so the window is extended by
    one level on either side where the spectrum allows.
    """
    lo = max(win.start - 1, 0)
    hi = min(win.stop + 1, sol.dim)
    return ratios_from_gaps(np.diff(sol.energies[lo:hi]))


def mean_gap_ratio(ratios) -> float:
    ratios = np.asarray(ratios, dtype=float)
    if ratios.size == 0:
        raise ValueError("mean gap ratio of an empty list")
    return float(np.mean(ratios))
