"""Disorder ensembles: seeding, parallel execution, persistence, aggregation.

Record files are CSV with a header and one realization per line. Floats are
written with ``repr`` so they round-trip at full double precision. After a run
completes the file is rewritten sorted by key, which makes it independent of
worker count and completion order.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
import struct
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import __version__
from .basis import enumerate_sector
from .dynamics import default_time_grid, quench_ee_series
from .entanglement import Bipartition, entropies
from .hamiltonian import ChainSpec, build_hamiltonian, sample_fields
from .spectral import diagonalize, gap_ratios, mean_gap_ratio, mid_window

log = logging.getLogger(__name__)

THREADS_ENV = "MBLAB_THREADS"

RECORD_FIELDS = ("L", "P", "W", "seed", "mean_r", "mean_S_over_SP", "mean_Smbl_over_SP")
OBSERVABLES = ("mean_r", "mean_S_over_SP", "mean_Smbl_over_SP")
SERIES_FIELDS = ("L", "P", "W", "seed", "t", "S_over_SP")


def derive_seed(master_seed: int, L: int, P: int, w_index: int, realization: int) -> int:
    """64-bit realization seed: BLAKE2b-64 of the little-endian packed inputs."""
    payload = struct.pack(
        "<5Q",
        *(int(v) & 0xFFFFFFFFFFFFFFFF for v in (master_seed, L, P, w_index, realization)),
    )
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def thread_budget(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1"))
    if threads < 1:
        raise ValueError(f"thread budget must be >= 1, got {threads}")
    return threads


@dataclass(frozen=True, order=True)
class RealizationRecord:
    L: int
    P: int
    W: float
    seed: int
    mean_r: float = math.nan
    mean_S_over_SP: float = math.nan
    mean_Smbl_over_SP: float = math.nan

    @property
    def key(self):
        return (self.L, self.P, self.W, self.seed)

    @property
    def point(self):
        return (self.L, self.P, self.W)


@dataclass(frozen=True)
class EnsembleStats:
    L: int
    P: int
    W: float
    n: int
    mean: dict
    stderr: dict
    single: bool = False

    @property
    def point(self):
        return (self.L, self.P, self.W)


@dataclass
class Task:
    L: int
    P: int
    W: float
    seed: int
    realization: int


# -- workers --------------------------------------------------------------

@lru_cache(maxsize=8)
def _basis(L):
    return enumerate_sector(L)


def static_realization(spec: ChainSpec, seed: int, n_target: int = 50) -> RealizationRecord:
    """Gap ratio and both entanglement cuts averaged over the mid-spectrum window."""
    basis = _basis(spec.L)
    fields = sample_fields(spec, seed)
    sol = diagonalize(build_hamiltonian(spec, fields, basis), seed=seed)
    win = mid_window(sol, n_target)
    vecs = sol.vectors[:, win.start:win.stop]

    mid = Bipartition.mid(spec.L)
    s_mid = float(np.mean(entropies(vecs, basis, mid))) / mid.page()
    if (spec.L - spec.P) // 2 >= 1:
        mbl = Bipartition.mbl(spec.L, spec.P)
        s_mbl = float(np.mean(entropies(vecs, basis, mbl))) / mbl.page()
    else:
        # no strongly disordered block left of the region
        s_mbl = math.nan
    return RealizationRecord(spec.L, spec.P, float(spec.W), int(seed),
                             mean_gap_ratio(gap_ratios(sol, win)), s_mid, s_mbl)


def dynamics_realization(spec: ChainSpec, seed: int, times) -> tuple:
    res = quench_ee_series(spec, sample_fields(spec, seed), _basis(spec.L), times)
    return res.times, res.s_over_sp, res.saturation


def _run_static(task: Task, w, J, n_target):
    spec = ChainSpec(task.L, task.P, task.W, w, J)
    try:
        return static_realization(spec, task.seed, n_target), None
    except Exception as exc:  # reported in the manifest, never aggregated
        return None, {"L": task.L, "P": task.P, "W": task.W, "seed": task.seed, "error": repr(exc)}


def _run_dynamics(task: Task, w, J, times):
    spec = ChainSpec(task.L, task.P, task.W, w, J)
    try:
        return (task, dynamics_realization(spec, task.seed, times)), None
    except Exception as exc:
        return None, {"L": task.L, "P": task.P, "W": task.W, "seed": task.seed, "error": repr(exc)}


def execute(func: Callable, tasks: Sequence, threads: int = 1, **kwargs) -> Iterable:
    """Yield ``func(task, **kwargs)`` for every task, in completion order."""
    threads = thread_budget(threads)
    if threads == 1 or len(tasks) <= 1:
        from threadpoolctl import threadpool_limits
        with threadpool_limits(limits=threads):
            for t in tasks:
                yield func(t, **kwargs)
        return
    from joblib import Parallel, delayed
    par = Parallel(n_jobs=threads, backend="loky", return_as="generator_unordered")
    yield from par(delayed(func)(t, **kwargs) for t in tasks)


# -- grids ---------------------------------------------------------------

def make_tasks(grid: Sequence[tuple], n_realizations: int, master_seed: int) -> list[Task]:
    """Expand (L, P, W) points into per-realization tasks with derived seeds.

    The W index used for seeding is the position of W among the sorted distinct
    W values of the grid.
    """
    if not grid:
        raise ValueError("empty grid")
    if n_realizations < 1:
        raise ValueError("n_realizations must be >= 1")
    w_values = sorted({float(W) for _, _, W in grid})
    tasks = []
    for L, P, W in sorted({(int(L), int(P), float(W)) for L, P, W in grid}):
        ChainSpec(L, P, W)  # validate before any compute
        wi = w_values.index(W)
        tasks += [Task(L, P, W, derive_seed(master_seed, L, P, wi, k), k) for k in range(n_realizations)]
    return tasks


# -- persistence ---------------------------------------------------------

def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def write_records(path, records: Iterable[RealizationRecord]):
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_FIELDS)
        for rec in sorted(records, key=lambda r: r.key):
            w.writerow([_fmt(getattr(rec, f)) for f in RECORD_FIELDS])
    os.replace(tmp, path)


def read_records(path) -> list[RealizationRecord]:
    path = Path(path)
    if not path.exists():
        return []
    text = path.read_text()
    lines = text.splitlines()
    if text and not text.endswith("\n"):
        lines = lines[:-1]  # torn trailing line from an interrupted run
    out = []
    for row in csv.DictReader(lines):
        out.append(RealizationRecord(
            int(row["L"]), int(row["P"]), float(row["W"]), int(row["seed"]),
            float(row["mean_r"]), float(row["mean_S_over_SP"]), float(row["mean_Smbl_over_SP"]),
        ))
    return out


class RecordWriter:
    """Append-only writer used by the single collecting process."""

    def __init__(self, path, fields=RECORD_FIELDS):
        self.path = Path(path)
        new = not self.path.exists() or self.path.stat().st_size == 0
        self.fh = open(self.path, "a", newline="")
        self.writer = csv.writer(self.fh, lineterminator="\n")
        if new:
            self.writer.writerow(fields)

    def write(self, row):
        self.writer.writerow([_fmt(v) for v in row])
        self.fh.flush()

    def close(self):
        self.fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


# -- aggregation -----------------------------------------------------------

def _mean_stderr(values: np.ndarray) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((values - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)


def aggregate(records: Iterable[RealizationRecord], observables=OBSERVABLES) -> list[EnsembleStats]:
    """Mean and standard error per (L, P, W), independent of record order."""
    groups: dict[tuple, list] = {}
    for rec in sorted(records, key=lambda r: r.key):
        groups.setdefault(rec.point, []).append(rec)
    stats = []
    for (L, P, W), recs in groups.items():
        means, errs = {}, {}
        for obs in observables:
            vals = np.array([getattr(r, obs) for r in recs], dtype=float)
            means[obs], errs[obs] = _mean_stderr(vals)
        stats.append(EnsembleStats(L, P, W, len(recs), means, errs, single=len(recs) == 1))
    return stats


AGGREGATE_FIELDS = ("L", "P", "W", "P_over_L", "n", "single",
                    "mean_r", "stderr_r", "mean_S_over_SP", "stderr_S_over_SP",
                    "mean_Smbl_over_SP", "stderr_Smbl_over_SP")


def write_aggregates(path, stats: Sequence[EnsembleStats]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGGREGATE_FIELDS)
        for s in stats:
            w.writerow([s.L, s.P, _fmt(s.W), _fmt(s.P / s.L), s.n, int(s.single),
                        _fmt(s.mean["mean_r"]), _fmt(s.stderr["mean_r"]),
                        _fmt(s.mean["mean_S_over_SP"]), _fmt(s.stderr["mean_S_over_SP"]),
                        _fmt(s.mean["mean_Smbl_over_SP"]), _fmt(s.stderr["mean_Smbl_over_SP"])])


def read_aggregates(path) -> list[EnsembleStats]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(AGGREGATE_FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        rows = list(reader)
    out = []
    for row in rows:
        mean = {o: float(row[o]) for o in OBSERVABLES}
        err = {"mean_r": float(row["stderr_r"]),
               "mean_S_over_SP": float(row["stderr_S_over_SP"]),
               "mean_Smbl_over_SP": float(row["stderr_Smbl_over_SP"])}
        out.append(EnsembleStats(int(row["L"]), int(row["P"]), float(row["W"]), int(row["n"]),
                                 mean, err, single=bool(int(row["single"]))))
    return out


# -- manifest ------------------------------------------------------------

@dataclass
class RunManifest:
    command: str
    grid: list
    master_seed: int
    n_realizations: int
    counts: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    version: str = __version__
    created: str = ""

    def write(self, path):
        self.created = datetime.now(timezone.utc).isoformat(timespec="seconds")
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")


# -- runners ---------------------------------------------------------------

@dataclass
class GridResult:
    stats: list
    records: list
    failures: list
    manifest: RunManifest


def run_grid(grid, n_realizations: int, master_seed: int, out_dir=None, *, threads=None,
             n_target: int = 50, w: float = 0.5, J: float = 1.0, config=None) -> GridResult:
    """Static pipeline over a grid of (L, P, W) points.

    With ``out_dir`` set, records already present in ``records.csv`` are
    reused and only missing realizations are computed.
    """
    tasks = make_tasks(grid, n_realizations, master_seed)
    records_path = Path(out_dir) / "records.csv" if out_dir is not None else None
    done = {}
    if records_path is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        done = {r.key: r for r in read_records(records_path)}
        write_records(records_path, done.values())  # drop any torn tail
    todo = [t for t in tasks if (t.L, t.P, t.W, t.seed) not in done]
    log.info("static grid: %d tasks, %d already done", len(tasks), len(tasks) - len(todo))

    failures = []
    writer = RecordWriter(records_path) if records_path is not None else None
    try:
        for rec, fail in execute(_run_static, todo, threads=thread_budget(threads),
                                 w=w, J=J, n_target=n_target):
            if fail is not None:
                log.warning("realization failed: %s", fail)
                failures.append(fail)
                continue
            done[rec.key] = rec
            if writer is not None:
                writer.write([getattr(rec, f) for f in RECORD_FIELDS])
    finally:
        if writer is not None:
            writer.close()

    wanted = {(t.L, t.P, t.W, t.seed) for t in tasks}
    records = sorted((r for k, r in done.items() if k in wanted), key=lambda r: r.key)
    stats = aggregate(records)
    failures.sort(key=lambda f: (f["L"], f["P"], f["W"], f["seed"]))
    manifest = RunManifest(
        command="spectrum",
        grid=[list(p) for p in sorted({(int(L), int(P), float(W)) for L, P, W in grid})],
        master_seed=int(master_seed), n_realizations=int(n_realizations),
        counts={f"{s.L},{s.P},{_fmt(s.W)}": s.n for s in stats},
        failures=failures, config=config or {"w": w, "J": J, "n_target": n_target},
    )
    if out_dir is not None:
        write_records(records_path, done.values())
        write_aggregates(Path(out_dir) / "aggregates.csv", stats)
        manifest.write(Path(out_dir) / "manifest.json")
    return GridResult(stats, records, failures, manifest)


@dataclass
class DynamicsResult:
    times: np.ndarray
    series: dict          # (L, P, W) -> (mean over realizations, stderr) arrays
    saturation: dict      # (L, P, W) -> (mean, stderr, n)
    failures: list
    manifest: RunManifest


def run_dynamics(grid, n_realizations: int, master_seed: int, out_dir=None, *, threads=None,
                 times=None, w: float = 0.5, J: float = 1.0, config=None) -> DynamicsResult:
    """Quench pipeline over a grid; per-time and saturation aggregates."""
    times = default_time_grid() if times is None else np.asarray(times, dtype=float)
    tasks = make_tasks(grid, n_realizations, master_seed)
    results, failures = [], []
    for res, fail in execute(_run_dynamics, tasks, threads=thread_budget(threads),
                             w=w, J=J, times=times):
        if fail is not None:
            log.warning("realization failed: %s", fail)
            failures.append(fail)
        else:
            results.append(res)
    results.sort(key=lambda r: (r[0].L, r[0].P, r[0].W, r[0].seed))
    failures.sort(key=lambda f: (f["L"], f["P"], f["W"], f["seed"]))

    groups: dict[tuple, list] = {}
    for task, (t, s, sat) in results:
        groups.setdefault((task.L, task.P, task.W), []).append((task.seed, s, sat))
    series, saturation = {}, {}
    for point, items in groups.items():
        curves = np.array([s for _, s, _ in items])
        m = np.array([_mean_stderr(curves[:, k]) for k in range(len(times))])
        series[point] = (m[:, 0], m[:, 1])
        sm, se = _mean_stderr(np.array([sat for _, _, sat in items]))
        saturation[point] = (sm, se, len(items))

    manifest = RunManifest(
        command="dynamics",
        grid=[list(p) for p in sorted({(int(L), int(P), float(W)) for L, P, W in grid})],
        master_seed=int(master_seed), n_realizations=int(n_realizations),
        counts={f"{L},{P},{_fmt(W)}": n for (L, P, W), (_, _, n) in saturation.items()},
        failures=failures,
        config=config or {"w": w, "J": J, "times": [float(x) for x in times]},
    )
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "series_records.csv.tmp").unlink(missing_ok=True)
        with RecordWriter(out / "series_records.csv.tmp", SERIES_FIELDS) as wr:
            for task, (t, s, _) in results:
                for tk, sk in zip(t, s):
                    wr.write([task.L, task.P, task.W, task.seed, float(tk), float(sk)])
        os.replace(out / "series_records.csv.tmp", out / "series_records.csv")
        with open(out / "series.csv", "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["L", "P", "W", "t", "mean_S_over_SP", "stderr_S_over_SP"])
            for (L, P, W), (m, e) in sorted(series.items()):
                for tk, mk, ek in zip(times, m, e):
                    wr.writerow([L, P, _fmt(W), _fmt(float(tk)), _fmt(float(mk)), _fmt(float(ek))])
        with open(out / "saturation.csv", "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["L", "P", "W", "P_over_L", "n", "saturation", "stderr"])
            for (L, P, W), (m, e, n) in sorted(saturation.items()):
                wr.writerow([L, P, _fmt(W), _fmt(P / L), n, _fmt(m), _fmt(e)])
        manifest.write(out / "manifest.json")
    return DynamicsResult(times, series, saturation, failures, manifest)
