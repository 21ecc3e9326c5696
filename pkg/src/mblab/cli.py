"""Command-line front end.

    mblab spectrum      --config run.yaml [--sizes 10,12 --pvals 0 --wgrid 1:12:1 ...]
    mblab dynamics      --config run.yaml
    mblab collapse      --aggregates runs/x/aggregates.csv --out runs/x/collapse
    mblab cross         --aggregates runs/x/aggregates.csv --out runs/x/cross
    mblab phase-diagram --aggregates runs/x/aggregates.csv --out runs/x/phase
    mblab plot          --tables runs/x/phase

Exit codes: 0 success, 1 validation error, 2 computational error, 3 partial
completion (some realizations failed; see the manifest).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, load_config, parse_float_list, parse_int_list
from .ensemble import RunManifest, read_aggregates, run_dynamics, run_grid
from .fss import (MODES, OverlapError, ScalingDataset, collapse_table, crossing_point,
                  curves_from_stats, difference_curve, optimize_collapse, phase_boundary)
from .plotting import SchemaError, plot_directory
from .spectral import SpectralError

log = logging.getLogger("mblab")

EXIT_OK, EXIT_VALIDATION, EXIT_COMPUTE, EXIT_PARTIAL = 0, 1, 2, 3


def _fmt(v):
    if v is None:
        return ""
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _write_csv(path, header, rows):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _analysis_manifest(out, command, args, extra=None):
    m = RunManifest(command=command, grid=[], master_seed=0, n_realizations=0,
                    config={"args": {k: v for k, v in vars(args).items() if k != "func"},
                            **(extra or {})})
    m.write(Path(out) / "manifest.json")


def _config(args):
    overrides = {
        "seed": args.seed, "threads": args.threads, "out": args.out,
        "sizes": parse_int_list(args.sizes) if args.sizes is not None else None,
        "pvals": parse_int_list(args.pvals) if args.pvals is not None else None,
        "wgrid": parse_float_list(args.wgrid) if args.wgrid is not None else None,
        "realizations": args.realizations, "window_size": args.window_size,
    }
    return load_config(args.config, overrides)


# -- subcommands -----------------------------------------------------------

def cmd_spectrum(args) -> int:
    cfg = _config(args)
    res = run_grid(cfg.grid(), cfg.realizations["static"], cfg.seed, cfg.out,
                   threads=cfg.threads, n_target=cfg.window_size, w=cfg.w, J=cfg.J,
                   config=cfg.to_dict())
    for s in res.stats:
        log.info("L=%d P=%d W=%g n=%d  r=%.4f  S/SP=%.4f", s.L, s.P, s.W, s.n,
                 s.mean["mean_r"], s.mean["mean_S_over_SP"])
    print(f"wrote {cfg.out}/records.csv, aggregates.csv, manifest.json")
    return EXIT_PARTIAL if res.failures else EXIT_OK


def cmd_dynamics(args) -> int:
    cfg = _config(args)
    res = run_dynamics(cfg.grid(), cfg.realizations["dynamics"], cfg.seed, cfg.out,
                       threads=cfg.threads, times=cfg.times.values(), w=cfg.w, J=cfg.J,
                       config=cfg.to_dict())
    for (L, P, W), (m, e, n) in sorted(res.saturation.items()):
        log.info("L=%d P=%d W=%g n=%d  saturation=%.4f +- %.4f", L, P, W, n, m, e)
    print(f"wrote {cfg.out}/series.csv, saturation.csv, series_records.csv, manifest.json")
    return EXIT_PARTIAL if res.failures else EXIT_OK


def _load_stats(args):
    path = Path(args.aggregates)
    if not path.exists():
        raise ConfigError(f"aggregate file {path} does not exist")
    stats = read_aggregates(path)
    if not stats:
        raise ConfigError(f"{path}: no aggregate rows")
    return stats


def collapse_all(stats, observables=("EE", "GR"), bounds=((1.0, 15.0), (0.2, 3.0)),
                 nu_initial=1.0, restarts=5):
    """Collapse every (P, observable) with at least two sizes.

    The initial W_c guess is the mean of the crossing points at that P, or the
    middle of the W range when none are found.
    """
    reports, table, errors = [], [], []
    for obs in observables:
        crossings = phase_boundary(stats, "fixed_P_vary_W", obs)
        for P in sorted({s.P for s in stats}):
            try:
                ds = ScalingDataset.from_stats(stats, P, obs)
            except ValueError as exc:
                errors.append({"observable": obs, "P": P, "error": str(exc)})
                continue
            found = [c.value for c in crossings if c.fixed == P and c.found]
            lo, hi = bounds[0]
            guess = float(np.mean(found)) if found else float(np.median(ds.W))
            guess = min(max(guess, lo), hi)
            try:
                res = optimize_collapse(ds, (guess, nu_initial), bounds, restarts=restarts)
            except OverlapError as exc:
                errors.append({"observable": obs, "P": P,
                               "error": f"scaled data of different sizes do not overlap: {exc}"})
                continue
            reports.append({"observable": obs, "P": P, **res.as_dict()})
            for row in collapse_table(ds, res.W_c, res.nu):
                table.append([obs, P, row["L"], row["W"], row["x"], row["O"], row["dO"], res.W_c, res.nu])
    return reports, table, errors


def cmd_collapse(args) -> int:
    stats = _load_stats(args)
    cfg = load_config(args.config) if args.config else None
    opts = cfg.collapse if cfg else None
    kwargs = {}
    if opts:
        kwargs = {"observables": opts.observables, "bounds": opts.bounds,
                  "nu_initial": opts.nu_initial, "restarts": opts.restarts}
    reports, table, errors = collapse_all(stats, **kwargs)
    out = Path(args.out or Path(args.aggregates).parent / "collapse")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "collapse_report.json", "w") as fh:
        json.dump({"results": reports, "errors": errors}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_csv(out / "collapse_table.csv",
               ["observable", "P", "L", "W", "x", "O", "dO", "W_c", "nu"], table)
    _analysis_manifest(out, "collapse", args)
    for r in reports:
        print(f"{r['observable']} P={r['P']}: W_c={r['W_c']:.4f} +- {r['err_Wc']:.4f}  "
              f"nu={r['nu']:.4f} +- {r['err_nu']:.4f}  Q={r['Q']:.4f}  T={r['T']}")
    for e in errors:
        print(f"{e['observable']} P={e['P']}: collapse failed: {e['error']}", file=sys.stderr)
    if not reports:
        return EXIT_COMPUTE
    return EXIT_PARTIAL if errors else EXIT_OK


CROSS_HEADER = ["mode", "observable", "fixed", "axis", "L", "L_plus_2", "L_av", "value",
                "W", "P_over_L", "reason"]


def crossing_tables(stats, observables=("EE", "GR")):
    delta_rows, cross_rows = [], []
    for obs in observables:
        for mode in MODES:
            axis = "W" if mode == "fixed_P_vary_W" else "P_over_L"
            for fixed, curves in curves_from_stats(stats, mode, obs).items():
                for L in sorted(curves):
                    if L + 2 not in curves:
                        continue
                    try:
                        g, d = difference_curve(curves[L], curves[L + 2])
                    except ValueError as exc:
                        cross_rows.append([mode, obs, fixed, axis, L, L + 2, L + 1, None,
                                           None, None, str(exc)])
                        continue
                    delta_rows += [[mode, obs, fixed, L, L + 2, gx, dx] for gx, dx in zip(g, d)]
                    c = crossing_point(curves[L], curves[L + 2], axis, fixed=fixed)
                    if mode == "fixed_P_vary_W":
                        W, PL = c.value, (fixed / c.L_av)
                    else:
                        W, PL = fixed, c.value
                    if not c.found:
                        W = PL = None
                    cross_rows.append([mode, obs, fixed, axis, L, L + 2, c.L_av, c.value, W, PL, c.reason])
    return delta_rows, cross_rows


def cmd_cross(args) -> int:
    stats = _load_stats(args)
    delta_rows, cross_rows = crossing_tables(stats)
    out = Path(args.out or Path(args.aggregates).parent / "cross")
    _write_csv(out / "delta_curves.csv", ["mode", "observable", "fixed", "L", "L_plus_2", "x", "delta"],
               delta_rows)
    _write_csv(out / "crossings.csv", CROSS_HEADER, cross_rows)
    _analysis_manifest(out, "cross", args)
    for row in cross_rows:
        mode, obs, fixed, axis, L, L2, Lav, value = row[:8]
        where = f"{axis}*={value:.4f}" if value is not None else f"no crossing ({row[-1]})"
        print(f"{obs} {mode} fixed={fixed:g} L=({L},{L2}) L_av={Lav}: {where}")
    return EXIT_OK


def cmd_phase_diagram(args) -> int:
    stats = _load_stats(args)
    L = max(s.L for s in stats) if args.size is None else args.size
    heat = [[s.W, s.P / s.L, s.P, s.mean["mean_S_over_SP"], s.mean["mean_r"]]
            for s in sorted(stats, key=lambda s: (s.P, s.W)) if s.L == L]
    if not heat:
        raise ConfigError(f"no aggregates for L={L}")
    out = Path(args.out or Path(args.aggregates).parent / "phase")
    _write_csv(out / "heatmap.csv", ["W", "P_over_L", "P", "mean_S_over_SP", "mean_r"], heat)
    _, cross_rows = crossing_tables(stats)
    _write_csv(out / "boundary.csv", CROSS_HEADER, cross_rows)
    _analysis_manifest(out, "phase-diagram", args, {"heatmap_L": L})
    n_found = sum(1 for r in cross_rows if r[7] is not None)
    print(f"heatmap for L={L} ({len(heat)} points); {n_found} boundary markers -> {out}")
    return EXIT_OK


def cmd_plot(args) -> int:
    made = plot_directory(args.tables, args.out)
    for p in made:
        print(p)
    return EXIT_OK


# -- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mblab", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def run_opts(p):
        p.add_argument("--config", help="YAML/JSON run configuration")
        p.add_argument("--seed", type=int, help="master seed (uint64)")
        p.add_argument("--threads", type=int, help="worker budget")
        p.add_argument("--out", help="output directory")
        p.add_argument("--sizes", help="system sizes, e.g. 10,12,14")
        p.add_argument("--pvals", help="thermal-region sizes, e.g. 0,1,2 or 'all'")
        p.add_argument("--wgrid", help="disorder values, e.g. 1,5,9 or 1:12:0.5")
        p.add_argument("--realizations", type=int, help="realizations per grid point")
        p.add_argument("--window-size", type=int, dest="window_size",
                       help="mid-spectrum eigenstates per realization (default 50)")

    for name, func in (("spectrum", cmd_spectrum), ("dynamics", cmd_dynamics)):
        p = sub.add_parser(name)
        run_opts(p)
        p.set_defaults(func=func)

    for name, func in (("collapse", cmd_collapse), ("cross", cmd_cross),
                       ("phase-diagram", cmd_phase_diagram)):
        p = sub.add_parser(name)
        p.add_argument("--aggregates", required=True, help="aggregates.csv from 'spectrum'")
        p.add_argument("--out", help="output directory")
        p.add_argument("--config", help="run configuration (collapse options)")
        if name == "phase-diagram":
            p.add_argument("--size", type=int, help="system size of the heatmap (default: largest)")
        p.set_defaults(func=func)

    p = sub.add_parser("plot")
    p.add_argument("--tables", required=True, help="directory holding tables from other commands")
    p.add_argument("--out", help="figure directory (default: TABLES/figures)")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SpectralError, OverlapError, ArithmeticError) as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
