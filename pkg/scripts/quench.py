"""Entanglement growth after a Neel quench, with and without a thermal region.

    python scripts/quench.py --L 10 --W 9 --pvals 0,2,10 --realizations 100
"""
import argparse

from mblab.config import parse_int_list
from mblab.ensemble import run_dynamics, thread_budget
from mblab.plotting import plot_time_series


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--L", type=int, default=10)
    ap.add_argument("--W", type=float, default=9.0)
    ap.add_argument("--pvals", default="0,2,10")
    ap.add_argument("--realizations", type=int, default=100)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--out", default="runs/quench")
    args = ap.parse_args()

    grid = [(args.L, P, args.W) for P in parse_int_list(args.pvals)]
    res = run_dynamics(grid, args.realizations, args.seed, args.out,
                       threads=thread_budget(args.threads))
    for (L, P, W), (m, e, n) in sorted(res.saturation.items()):
        print(f"L={L} P={P} W={W:g}: saturation {m:.4f} +- {e:.4f} (n={n})")
    print(plot_time_series(f"{args.out}/series.csv", f"{args.out}/figures/ee_vs_time.svg"))


if __name__ == "__main__":
    main()
