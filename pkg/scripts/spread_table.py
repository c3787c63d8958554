#!/usr/bin/env python3
"""Mean rounds to full infection against log2 n, one row per (model, p).

Oldest-k seeding, k = m. Prints the per-size means, the fitted slope and the
slope-stability ratio a(n_max)/a(n_max/4).
"""

import argparse

from contagionlab.experiments import run_spread_time, summarize_spread
from contagionlab.graphs import Model


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--models", nargs="+", default=[m.value for m in Model])
    ap.add_argument("--ps", type=float, nargs="+", default=[0.0, 0.5, 1.0])
    ap.add_argument("--log2n", type=int, nargs="+", default=[10, 12, 14, 16])
    ap.add_argument("--m", type=int, default=2)
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--distinct", action="store_true", help="count distinct infected neighbours only")
    a = ap.parse_args()
    ns = [2**e for e in a.log2n]
    recs = run_spread_time(ns, a.models, a.ps, a.m, reps=a.reps, base_seed=a.seed, count_multiplicity=not a.distinct)
    print(f"{'model':16} {'p':>4}  " + " ".join(f"2^{e:<5}" for e in a.log2n) + "  slope  stab  full")
    for row in summarize_spread(recs):
        means = " ".join(f"{x:7.2f}" for x in row["mean_rounds"])
        stab = row["stability"]
        print(
            f"{row['model']:16} {row['p']:4.2f}  {means}  {row['slope']:5.2f}  "
            f"{'-' if stab is None else f'{stab:4.2f}'}  {row['full_fraction']:.2f}"
        )


if __name__ == "__main__":
    main()
