"""Quench from the Neel state and growth of the half-chain entanglement."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import SectorBasis, lookup
from .entanglement import Bipartition, entropies
from .hamiltonian import ChainSpec, FieldProfile, build_hamiltonian
from .spectral import EigenSolution, diagonalize

SATURATION_WINDOW = (1e2, 1e3)


def default_time_grid(n: int = 60, t_min: float = 1e-1, t_max: float = 1e3) -> np.ndarray:
    """``t = 0`` followed by ``n`` log-spaced times in ``[t_min, t_max]``."""
    return np.concatenate([[0.0], np.logspace(np.log10(t_min), np.log10(t_max), n)])


@dataclass(frozen=True)
class QuenchResult:
    times: np.ndarray
    s_over_sp: np.ndarray
    saturation: float


def neel_config(L: int) -> int:
    """Configuration up-down-up-down... with site 1 up (bits 0, 2, 4, ... set)."""
    return sum(1 << i for i in range(0, L, 2))


def neel_state(basis: SectorBasis) -> np.ndarray:
    psi = np.zeros(basis.dim)
    psi[lookup(basis, neel_config(basis.L))] = 1.0
    return psi


def evolve_many(sol: EigenSolution, psi0: np.ndarray, times) -> np.ndarray:
    """States ``exp(-iHt) psi0`` for each time, as columns of a (d, n_t) array.

    Columns with ``t == 0`` are ``psi0`` itself.
    """
    psi0 = np.asarray(psi0)
    if psi0.shape != (sol.dim,):
        raise ValueError(f"state of shape {psi0.shape} does not match dimension {sol.dim}")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    coeff = sol.vectors.T @ psi0
    phases = np.exp(-1j * np.outer(sol.energies, times))
    out = sol.vectors @ (phases * coeff[:, None])
    out[:, times == 0] = psi0[:, None]
    return out


def evolve(sol: EigenSolution, psi0: np.ndarray, t: float) -> np.ndarray:
    """Single-time spectral propagation of ``psi0``."""
    return evolve_many(sol, psi0, [t])[:, 0]


def saturation_value(times: np.ndarray, values: np.ndarray, window=SATURATION_WINDOW) -> float:
    sel = (times >= window[0]) & (times <= window[1])
    if not np.any(sel):
        raise ValueError(f"time grid has no points in the saturation window {window}")
    return float(np.mean(values[sel]))


def quench_ee_series(spec: ChainSpec, fields: FieldProfile, basis: SectorBasis,
                     time_grid=None, sol: EigenSolution | None = None) -> QuenchResult:
    """Half-chain S(t)/S_P after a quench from the Neel state."""
    times = default_time_grid() if time_grid is None else np.asarray(time_grid, dtype=float)
    if np.any(np.diff(times) <= 0):
        raise ValueError("time grid must be strictly increasing")
    if sol is None:
        sol = diagonalize(build_hamiltonian(spec, fields, basis), seed=fields.seed)
    cut = Bipartition.mid(spec.L)
    states = evolve_many(sol, neel_state(basis), times)
    s = entropies(states, basis, cut) / cut.page()
    s = np.maximum(s, 0.0)
    return QuenchResult(times=times, s_over_sp=s, saturation=saturation_value(times, s))
