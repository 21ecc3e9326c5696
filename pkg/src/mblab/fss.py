"""Finite-size scaling collapse and crossing-point phase boundaries.

The collapse assumes ``O_L(W) = f(L**(1/nu) * (W - W_c))``. Its quality is

    Q = (1/T) sum_ij (O_ij - M_ij)**2 / (dO_ij**2 + dM_ij**2)

where the master-curve estimate ``M_ij`` and its variance ``dM_ij**2`` come
from a weighted straight-line fit through the points of every *other* system
size that bracket ``x_ij`` (nearest point at or below and nearest point above).
Points without any bracketing neighbours are left out and ``T`` counts the
points that remain.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

log = logging.getLogger(__name__)

OBSERVABLE_COLUMNS = {"EE": "mean_S_over_SP", "GR": "mean_r", "EE_MBL": "mean_Smbl_over_SP"}
DEFAULT_BOUNDS = ((1.0, 15.0), (0.2, 3.0))
ERROR_RULE = "one-parameter distance at which Q reaches Q_min + 1"


class OverlapError(ValueError):
    """Scaled data ranges of different sizes do not overlap (T = 0)."""


@dataclass(frozen=True)
class ScalingDataset:
    """Flat arrays, one entry per (L, W) point.

    Use :meth:`from_arrays` or :meth:`from_stats`; both sort the points by
    (L, W) and validate them.
    """

    L: np.ndarray
    W: np.ndarray
    O: np.ndarray
    dO: np.ndarray

    @classmethod
    def from_arrays(cls, L, W, O, dO) -> "ScalingDataset":
        L, W, O, dO = (np.asarray(a, dtype=float).ravel() for a in (L, W, O, dO))
        if not (len(L) == len(W) == len(O) == len(dO)):
            raise ValueError("L, W, O and dO must have the same length")
        order = np.lexsort((W, L))
        ds = cls(L[order], W[order], O[order], dO[order])
        ds.validate()
        return ds

    @classmethod
    def from_stats(cls, stats, P: int, observable: str = "EE") -> "ScalingDataset":
        """Dataset at fixed thermal-region size ``P`` from ensemble aggregates."""
        col = OBSERVABLE_COLUMNS.get(observable, observable)
        sel = [s for s in stats if s.P == P]
        return cls.from_arrays([s.L for s in sel], [s.W for s in sel],
                               [s.mean[col] for s in sel], [s.stderr[col] for s in sel])

    def validate(self):
        sizes = self.sizes
        if len(sizes) < 2:
            raise ValueError("scaling dataset needs at least 2 system sizes")
        for L in sizes:
            if np.count_nonzero(self.L == L) < 4:
                raise ValueError(f"size L={L:g} has fewer than 4 W points")
        if not np.all(self.dO > 0):
            raise ValueError("all uncertainties dO must be positive")
        if not np.all(np.isfinite(self.O)):
            raise ValueError("observable values must be finite")

    @property
    def sizes(self) -> np.ndarray:
        return np.unique(self.L)

    def scaled(self, factor: float = 1.0) -> "ScalingDataset":
        return ScalingDataset(self.L, self.W, self.O * factor, self.dO * abs(factor))

    def shifted(self, dW: float) -> "ScalingDataset":
        return ScalingDataset(self.L, self.W + dW, self.O, self.dO)


def scaled_x(L, W, W_c, nu):
    """Scaled disorder ``L**(1/nu) * (W - W_c)``."""
    if not nu > 0:
        raise ValueError(f"nu must be positive, got {nu}")
    return np.power(L, 1.0 / nu) * (np.asarray(W) - W_c)


def master_curve(ds: ScalingDataset, W_c: float, nu: float):
    """Master-curve estimate at every data point.

    Returns
    -------
    x, M, dM2, ok : np.ndarray
        Scaled abscissae, master-curve values, their variances, and a mask of
        points that had bracketing neighbours (``M`` and ``dM2`` are NaN
        elsewhere).
    """
    x = scaled_x(ds.L, ds.W, W_c, nu)
    w = 1.0 / ds.dO ** 2
    n = len(x)
    K = np.zeros(n)
    Kx = np.zeros(n)
    Ky = np.zeros(n)
    Kxx = np.zeros(n)
    Kxy = np.zeros(n)
    sizes = ds.sizes
    masks = [ds.L == L for L in sizes]
    for a, ma in enumerate(masks):
        xa = x[ma]
        for b, mb in enumerate(masks):
            if a == b:
                continue
            xb, yb, wb = x[mb], ds.O[mb], w[mb]
            # nearest point at or below, and the next one above
            k = np.searchsorted(xb, xa, side="right") - 1
            hit = (k >= 0) & (k < len(xb) - 1)
            idx = np.nonzero(ma)[0][hit]
            for kk in (k[hit], k[hit] + 1):
                K[idx] += wb[kk]
                Kx[idx] += wb[kk] * xb[kk]
                Ky[idx] += wb[kk] * yb[kk]
                Kxx[idx] += wb[kk] * xb[kk] ** 2
                Kxy[idx] += wb[kk] * xb[kk] * yb[kk]
    ok = K > 0
    M = np.full(n, np.nan)
    dM2 = np.full(n, np.nan)
    D = K[ok] * Kxx[ok] - Kx[ok] ** 2
    xo = x[ok]
    M[ok] = (Kxx[ok] * Ky[ok] - Kx[ok] * Kxy[ok]) / D + xo * (K[ok] * Kxy[ok] - Kx[ok] * Ky[ok]) / D
    dM2[ok] = (Kxx[ok] - 2 * xo * Kx[ok] + xo ** 2 * K[ok]) / D
    return x, M, dM2, ok


def quality(ds: ScalingDataset, W_c: float, nu: float) -> tuple[float, int]:
    """Collapse quality ``Q`` and the number of contributing points ``T``."""
    _, M, dM2, ok = master_curve(ds, W_c, nu)
    T = int(np.count_nonzero(ok))
    if T == 0:
        raise OverlapError(f"no overlapping scaled data at W_c={W_c:g}, nu={nu:g}")
    terms = (ds.O[ok] - M[ok]) ** 2 / (ds.dO[ok] ** 2 + dM2[ok])
    return float(math.fsum(terms) / T), T


@dataclass
class CollapseResult:
    W_c: float
    nu: float
    Q: float
    err_Wc: float
    err_nu: float
    T: int
    bounds: tuple = DEFAULT_BOUNDS
    bounds_hit: dict = field(default_factory=dict)
    error_rule: str = ERROR_RULE

    @property
    def at_bound(self) -> bool:
        return any(self.bounds_hit.values())

    def as_dict(self) -> dict:
        return {"W_c": self.W_c, "nu": self.nu, "Q": self.Q, "err_Wc": self.err_Wc,
                "err_nu": self.err_nu, "T": self.T, "bounds": [list(b) for b in self.bounds],
                "bounds_hit": dict(self.bounds_hit), "error_rule": self.error_rule}


def _objective(ds, bounds):
    (w_lo, w_hi), (n_lo, n_hi) = bounds

    def f(p):
        W_c, nu = p
        if not (w_lo <= W_c <= w_hi and n_lo <= nu <= n_hi):
            return np.inf
        try:
            return quality(ds, W_c, nu)[0]
        except OverlapError:
            return np.inf

    return f


def _nelder_mead(f, x0, bounds, scale):
    simplex = np.array([x0, x0 + [scale[0], 0.0], x0 + [0.0, scale[1]]])
    for row in simplex:
        np.clip(row, [b[0] for b in bounds], [b[1] for b in bounds], out=row)
    if np.allclose(simplex[1], simplex[0]):
        simplex[1, 0] -= scale[0]
    if np.allclose(simplex[2], simplex[0]):
        simplex[2, 1] -= scale[1]
    res = minimize(f, x0, method="Nelder-Mead", bounds=bounds,
                   options={"initial_simplex": simplex, "xatol": 1e-7, "fatol": 1e-10,
                            "maxiter": 4000, "maxfev": 8000})
    return np.asarray(res.x, dtype=float), float(res.fun)


def _one_sided_error(f, p, axis, sign, target, bound, span):
    """Distance from ``p`` along ``axis`` where ``f`` first reaches ``target``."""
    x0 = p[axis]

    def g(delta):
        q = p.copy()
        q[axis] = x0 + sign * delta
        return f(q) - target

    limit = abs(bound - x0)
    if limit == 0:
        return None
    step = min(span * 1e-3, limit)
    prev = 0.0
    while True:
        cur = min(prev + step, limit)
        if g(cur) >= 0:
            # bisection on the predicate g >= 0; also handles the T = 0 region (inf)
            lo, hi = prev, cur
            while hi - lo > 1e-10 * max(1.0, span):
                mid = 0.5 * (lo + hi)
                if g(mid) >= 0:
                    hi = mid
                else:
                    lo = mid
            return 0.5 * (lo + hi)
        if cur >= limit:
            return None
        prev, step = cur, step * 1.5


def optimize_collapse(ds: ScalingDataset, initial=(4.0, 1.0), bounds=DEFAULT_BOUNDS,
                      restarts: int = 5, seed: int = 0, grid_points: int = 21) -> CollapseResult:
    """Minimize the collapse quality over (W_c, nu).

    Runs Nelder-Mead from ``initial`` and from ``restarts`` jittered copies of
    it, keeps the best, then checks a ``grid_points x grid_points`` grid around
    the optimum and restarts from any grid point that beats it. Error bars
    follow :data:`ERROR_RULE`.
    """
    bounds = tuple(tuple(float(v) for v in b) for b in bounds)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    x0 = np.asarray(initial, dtype=float)
    if np.any(x0 < lo) or np.any(x0 > hi):
        raise ValueError(f"initial guess {tuple(x0)} outside bounds {bounds}")
    f = _objective(ds, bounds)
    if not np.isfinite(f(x0)):
        # let quality raise the informative error if nothing overlaps
        quality(ds, *x0)

    rng = np.random.default_rng(seed)
    width = hi - lo
    scale = np.array([0.05 * width[0], 0.05 * width[1]])
    starts = [x0] + [np.clip(x0 + rng.uniform(-1, 1, 2) * np.array([0.5, 0.2 * x0[1]]), lo, hi)
                     for _ in range(restarts)]
    best_x, best_q = None, np.inf
    for s in starts:
        x, q = _nelder_mead(f, s, bounds, scale)
        if q < best_q:
            best_x, best_q = x, q
    if not np.isfinite(best_q):
        raise OverlapError("collapse optimizer found no point with overlapping data")

    for _ in range(10):
        errs = _errors(f, best_x, best_q, lo, hi, width)
        improved = _grid_check(f, best_x, best_q, errs, lo, hi, grid_points)
        if improved is None:
            break
        x, q = _nelder_mead(f, improved, bounds, scale * 0.1)
        best_x, best_q = (x, q) if q < f(improved) else (improved, f(improved))
    errs = _errors(f, best_x, best_q, lo, hi, width)

    tol = 1e-6 * width
    hit = {"W_c": bool(min(best_x[0] - lo[0], hi[0] - best_x[0]) < tol[0]),
           "nu": bool(min(best_x[1] - lo[1], hi[1] - best_x[1]) < tol[1])}
    if any(hit.values()):
        log.warning("collapse optimum at parameter bound: %s", hit)
    _, T = quality(ds, *best_x)
    return CollapseResult(W_c=float(best_x[0]), nu=float(best_x[1]), Q=float(best_q),
                          err_Wc=float(errs[0]), err_nu=float(errs[1]), T=T,
                          bounds=bounds, bounds_hit=hit)


def _errors(f, x, q, lo, hi, width):
    errs = []
    for axis in (0, 1):
        sides = [_one_sided_error(f, x.copy(), axis, sgn, q + 1.0, bnd, width[axis])
                 for sgn, bnd in ((-1, lo[axis]), (+1, hi[axis]))]
        found = [d for d in sides if d is not None]
        if found:
            errs.append(float(np.mean(found)))
        else:
            # Q never rises by 1 inside the bounds
            errs.append(float(width[axis]))
    return errs


def _grid_check(f, x, q, errs, lo, hi, n):
    """Return a grid point around ``x`` with lower objective, or None."""
    half = [max(errs[0], 1e-3), max(errs[1], 1e-3)]
    g0 = np.clip(np.linspace(x[0] - half[0], x[0] + half[0], n), lo[0], hi[0])
    g1 = np.clip(np.linspace(x[1] - half[1], x[1] + half[1], n), lo[1], hi[1])
    best, best_q = None, q
    for a in g0:
        for b in g1:
            v = f(np.array([a, b]))
            if v < best_q:
                best, best_q = np.array([a, b]), v
    return best


def collapse_grid(ds: ScalingDataset, result: CollapseResult, n: int = 21) -> tuple:
    """Quality on an ``n x n`` grid spanning the reported error bars."""
    hw = [max(result.err_Wc, 1e-3), max(result.err_nu, 1e-3)]
    (wl, wh), (nl, nh) = result.bounds
    g0 = np.clip(np.linspace(result.W_c - hw[0], result.W_c + hw[0], n), wl, wh)
    g1 = np.clip(np.linspace(result.nu - hw[1], result.nu + hw[1], n), nl, nh)
    f = _objective(ds, result.bounds)
    Qg = np.array([[f(np.array([a, b])) for b in g1] for a in g0])
    return g0, g1, Qg


def collapse_table(ds: ScalingDataset, W_c: float, nu: float) -> list[dict]:
    """Rows (L, W, x, O, dO) of the collapsed data for plotting."""
    x = scaled_x(ds.L, ds.W, W_c, nu)
    return [{"L": int(L), "W": float(W), "x": float(xx), "O": float(o), "dO": float(e)}
            for L, W, xx, o, e in zip(ds.L, ds.W, x, ds.O, ds.dO)]


# -- crossings -------------------------------------------------------------

AXES = ("W", "P_over_L")


@dataclass(frozen=True)
class Curve:
    L: int
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.shape != v.shape or g.ndim != 1 or len(g) < 2:
            raise ValueError("curve needs matching 1-D grid and values with >= 2 points")
        order = np.argsort(g, kind="stable")
        object.__setattr__(self, "grid", g[order])
        object.__setattr__(self, "values", v[order])


@dataclass(frozen=True)
class CrossingResult:
    L_av: int
    value: Optional[float]
    axis: str
    pair: tuple = ()
    fixed: Optional[float] = None
    reason: str = ""

    @property
    def found(self) -> bool:
        return self.value is not None


def difference_curve(curveA: Curve, curveB: Curve):
    """Common grid and ``larger-L minus smaller-L`` on it.

    The common grid is the union of both grids restricted to their overlap;
    each curve is interpolated linearly onto it.
    """
    small, large = sorted((curveA, curveB), key=lambda c: c.L)
    lo = max(small.grid[0], large.grid[0])
    hi = min(small.grid[-1], large.grid[-1])
    if not lo < hi:
        raise ValueError("curves have no overlapping grid range")
    g = np.union1d(small.grid, large.grid)
    g = g[(g >= lo) & (g <= hi)]
    delta = np.interp(g, large.grid, large.values) - np.interp(g, small.grid, small.values)
    return g, delta


def sign_changes(grid: np.ndarray, delta: np.ndarray, direction: int = -1) -> list[float]:
    """Zero locations where ``delta`` changes sign in ``direction``.

    ``direction=-1`` finds positive-to-negative changes as the grid increases,
    ``+1`` negative-to-positive. Exact zeros between the two signs locate the
    crossing at the first such grid point; otherwise the zero is interpolated
    linearly.
    """
    nz = np.nonzero(delta != 0)[0]
    out = []
    for a, b in zip(nz[:-1], nz[1:]):
        da, db = delta[a], delta[b]
        if np.sign(da) != -direction or np.sign(db) != direction:
            continue
        if b > a + 1:
            out.append(float(grid[a + 1]))
        else:
            out.append(float(grid[a] + da * (grid[b] - grid[a]) / (da - db)))
    return out


def _direction(axis: str) -> int:
    # larger systems are more ergodic at small W and at large P/L
    if axis == "W":
        return -1
    if axis == "P_over_L":
        return +1
    raise ValueError(f"unknown axis {axis!r}; expected one of {AXES}")


def crossing_point(curveA: Curve, curveB: Curve, axis: str = "W", fixed=None) -> CrossingResult:
    """First crossing of two curves for sizes L and L+2.

    On the ``W`` axis the difference (larger minus smaller size) must go from
    positive to negative; on the ``P_over_L`` axis from negative to positive.
    Without such a change a no-crossing result is returned.
    """
    direction = _direction(axis)
    small, large = sorted((curveA.L, curveB.L))
    g, delta = difference_curve(curveA, curveB)
    found = sign_changes(g, delta, direction)
    if not found:
        return CrossingResult(small + 1, None, axis, (small, large), fixed,
                              reason="no sign change of the difference in the scanned range")
    return CrossingResult(small + 1, found[0], axis, (small, large), fixed)


MODES = ("fixed_P_vary_W", "fixed_W_vary_PoverL")


def curves_from_stats(stats, mode: str, observable: str = "EE") -> dict:
    """Group aggregates into curves: ``{fixed value: {L: Curve}}``."""
    col = OBSERVABLE_COLUMNS.get(observable, observable)
    groups: dict = {}
    for s in stats:
        if mode == "fixed_P_vary_W":
            key, x = s.P, s.W
        elif mode == "fixed_W_vary_PoverL":
            key, x = s.W, s.P / s.L
        else:
            raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
        groups.setdefault(key, {}).setdefault(s.L, []).append((x, s.mean[col]))
    out = {}
    for key, by_L in sorted(groups.items()):
        out[key] = {}
        for L, pts in sorted(by_L.items()):
            if len(pts) >= 2:
                pts.sort()
                out[key][L] = Curve(L, np.array([p[0] for p in pts]), np.array([p[1] for p in pts]))
    return out


def phase_boundary(stats, mode: str = "fixed_P_vary_W", observable: str = "EE") -> list[CrossingResult]:
    """Crossings of every (L, L+2) pair, one marker set per fixed P or fixed W."""
    axis = "W" if mode == "fixed_P_vary_W" else "P_over_L"
    results = []
    for fixed, curves in curves_from_stats(stats, mode, observable).items():
        for L in sorted(curves):
            if L + 2 in curves:
                try:
                    results.append(crossing_point(curves[L], curves[L + 2], axis, fixed=fixed))
                except ValueError as exc:
                    results.append(CrossingResult(L + 1, None, axis, (L, L + 2), fixed, reason=str(exc)))
    return results
