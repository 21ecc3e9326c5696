"""Static SVG figures, each written next to the table it was drawn from."""
from __future__ import annotations

import csv
import shutil
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams["svg.hashsalt"] = "mblab"
plt.rcParams["svg.fonttype"] = "path"

LABELS = {"mean_S_over_SP": r"$\overline{\langle S\rangle}/S_P$",
          "mean_Smbl_over_SP": r"$\overline{\langle S_{mbl}\rangle}/S_P$",
          "mean_r": r"$\overline{\langle r\rangle}$"}


class SchemaError(ValueError):
    pass


def read_table(path, required) -> list[dict]:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        missing = [c for c in required if c not in cols]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: table is empty")
    return rows


def _col(rows, name, cast=float):
    return np.array([cast(r[name]) for r in rows])


def _save(fig, table: Path, out: Path):
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    side = out.with_suffix(".csv")
    if table.resolve() != side.resolve():
        shutil.copyfile(table, side)
    return out


def plot_vs_W(table, out, observables=("mean_S_over_SP", "mean_r")):
    """Observable against W, one line per L, one panel per (observable, P)."""
    rows = read_table(table, ["L", "P", "W"] + list(observables))
    Ps = sorted({int(r["P"]) for r in rows})
    fig, axes = plt.subplots(len(observables), len(Ps), squeeze=False,
                             figsize=(3.2 * len(Ps), 2.6 * len(observables)))
    for i, obs in enumerate(observables):
        for j, P in enumerate(Ps):
            ax = axes[i, j]
            sel = [r for r in rows if int(r["P"]) == P]
            for L in sorted({int(r["L"]) for r in sel}):
                pts = sorted((float(r["W"]), float(r[obs])) for r in sel if int(r["L"]) == L)
                ax.plot(*zip(*pts), "o-", ms=3, label=f"L={L}")
            ax.set_xlabel("W")
            ax.set_ylabel(LABELS.get(obs, obs))
            ax.set_title(f"P={P}", fontsize=9)
            ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, Path(table), Path(out))


def plot_vs_PoverL(table, out, W=None, observables=("mean_S_over_SP", "mean_Smbl_over_SP", "mean_r")):
    rows = read_table(table, ["L", "P", "W", "P_over_L"] + list(observables))
    Ws = sorted({float(r["W"]) for r in rows})
    W = Ws[-1] if W is None else W
    sel = [r for r in rows if float(r["W"]) == W]
    fig, axes = plt.subplots(1, len(observables), squeeze=False, figsize=(3.2 * len(observables), 2.6))
    for j, obs in enumerate(observables):
        ax = axes[0, j]
        for L in sorted({int(r["L"]) for r in sel}):
            pts = sorted((float(r["P_over_L"]), float(r[obs])) for r in sel if int(r["L"]) == L)
            ax.plot(*zip(*pts), "o-", ms=3, label=f"L={L}")
        ax.set_xlabel("P/L")
        ax.set_ylabel(LABELS.get(obs, obs))
        ax.set_title(f"W={W:g}", fontsize=9)
        ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, Path(table), Path(out))


def plot_heatmap(table, out, boundary=None, value="mean_S_over_SP"):
    rows = read_table(table, ["W", "P_over_L", value])
    Ws = np.unique(_col(rows, "W"))
    Ps = np.unique(_col(rows, "P_over_L"))
    Z = np.full((len(Ps), len(Ws)), np.nan)
    for r in rows:
        Z[np.searchsorted(Ps, float(r["P_over_L"])), np.searchsorted(Ws, float(r["W"]))] = float(r[value])
    fig, ax = plt.subplots(figsize=(4.2, 3.4))
    mesh = ax.pcolormesh(Ws, Ps, Z, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=LABELS.get(value, value))
    if boundary is not None:
        brows = read_table(boundary, ["mode", "W", "P_over_L"])
        obs = "EE" if value != "mean_r" else "GR"
        brows = [b for b in brows if b["W"] not in ("", "nan") and b.get("observable", obs) == obs]
        for mode, marker in (("fixed_P_vary_W", "o"), ("fixed_W_vary_PoverL", "*")):
            pts = [b for b in brows if b["mode"] == mode]
            if pts:
                ax.plot([float(b["W"]) for b in pts], [float(b["P_over_L"]) for b in pts], marker,
                        color="w", mec="k", ms=6, ls="none", label=mode)
    ax.set_xlabel("W")
    ax.set_ylabel("P/L")
    fig.tight_layout()
    return _save(fig, Path(table), Path(out))


def plot_time_series(table, out):
    rows = read_table(table, ["L", "P", "W", "t", "mean_S_over_SP"])
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    keys = sorted({(int(r["L"]), int(r["P"]), float(r["W"])) for r in rows})
    for L, P, W in keys:
        pts = sorted((float(r["t"]), float(r["mean_S_over_SP"])) for r in rows
                     if (int(r["L"]), int(r["P"]), float(r["W"])) == (L, P, W) and float(r["t"]) > 0)
        ax.plot(*zip(*pts), "-", label=f"L={L} P={P} W={W:g}")
    ax.set_xscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel(r"$\overline{S(t)}/S_P$")
    ax.legend(fontsize=6)
    fig.tight_layout()
    return _save(fig, Path(table), Path(out))


def plot_collapse(table, out):
    rows = read_table(table, ["observable", "P", "L", "x", "O", "dO", "W_c", "nu"])
    groups = sorted({(r["observable"], int(r["P"])) for r in rows})
    fig, axes = plt.subplots(1, len(groups), squeeze=False, figsize=(3.2 * len(groups), 2.8))
    for ax, (obs, P) in zip(axes[0], groups):
        sel = [r for r in rows if r["observable"] == obs and int(r["P"]) == P]
        for L in sorted({int(r["L"]) for r in sel}):
            pts = sorted((float(r["x"]), float(r["O"]), float(r["dO"])) for r in sel if int(r["L"]) == L)
            x, y, e = map(np.array, zip(*pts))
            ax.errorbar(x, y, yerr=e, fmt="o", ms=3, label=f"L={L}")
        Wc, nu = float(sel[0]["W_c"]), float(sel[0]["nu"])
        ax.set_xlabel(r"$L^{1/\nu}(W-W_c)$")
        ax.set_title(f"{obs} P={P}: $W_c$={Wc:.3f}, $\\nu$={nu:.3f}", fontsize=8)
        ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, Path(table), Path(out))


def plot_directory(tables_dir, out_dir=None) -> list[Path]:
    """Render every figure whose source table exists in ``tables_dir``."""
    tables_dir = Path(tables_dir)
    out_dir = Path(out_dir) if out_dir is not None else tables_dir / "figures"
    made = []
    agg = tables_dir / "aggregates.csv"
    if agg.exists():
        made.append(plot_vs_W(agg, out_dir / "observables_vs_W.svg"))
        made.append(plot_vs_PoverL(agg, out_dir / "observables_vs_PoverL.svg"))
    heat = tables_dir / "heatmap.csv"
    if heat.exists():
        bnd = tables_dir / "boundary.csv"
        made.append(plot_heatmap(heat, out_dir / "phase_heatmap.svg", bnd if bnd.exists() else None))
    series = tables_dir / "series.csv"
    if series.exists():
        made.append(plot_time_series(series, out_dir / "ee_vs_time.svg"))
    col = tables_dir / "collapse_table.csv"
    if col.exists():
        made.append(plot_collapse(col, out_dir / "collapse.svg"))
    if not made:
        raise SchemaError(f"{tables_dir}: no recognised tables (aggregates.csv, heatmap.csv, "
                          "series.csv, collapse_table.csv)")
    return made
