"""Gap ratio and S/S_P versus W at P=0 for a few small sizes.

    python scripts/endpoints.py --sizes 8,10 --realizations 200 --out runs/endpoints
"""
import argparse

from mblab.config import parse_float_list, parse_int_list
from mblab.ensemble import run_grid, thread_budget
from mblab.plotting import plot_vs_W
from mblab.spectral import GOE_MEAN_R, POISSON_MEAN_R


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--sizes", default="8,10")
    ap.add_argument("--wgrid", default="1,2,3,4,5,6,7,8,10,12")
    ap.add_argument("--realizations", type=int, default=200)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--out", default="runs/endpoints")
    args = ap.parse_args()

    grid = [(L, 0, W) for L in parse_int_list(args.sizes) for W in parse_float_list(args.wgrid)]
    res = run_grid(grid, args.realizations, args.seed, args.out, threads=thread_budget(args.threads))
    print(f"reference r: GOE {GOE_MEAN_R}, Poisson {POISSON_MEAN_R}")
    print(f"{'L':>3} {'W':>6} {'r':>8} {'S/S_P':>8}")
    for s in res.stats:
        print(f"{s.L:>3} {s.W:>6g} {s.mean['mean_r']:>8.4f} {s.mean['mean_S_over_SP']:>8.4f}")
    print(plot_vs_W(f"{args.out}/aggregates.csv", f"{args.out}/figures/observables_vs_W.svg"))


if __name__ == "__main__":
    main()
