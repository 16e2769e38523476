"""Gradient-growth experiment: sup|D eta| and stagnation-point stretching against N.

Usage: python3 scripts/run_growth.py [--M 3] [--N 1 2 3] [--n 512]
"""

import argparse

from vilab.diagnostics import gradient_growth_experiment
from vilab.fields import GridSpec


def run():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--M", type=float, default=3.0)
    ap.add_argument("--N", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--p", type=float, default=2.5)
    ap.add_argument("--n", type=int, default=512, help="grid points per side on a box of side 2")
    args = ap.parse_args()
    rows = gradient_growth_experiment(args.M, tuple(args.N), args.p, grid=GridSpec(2.0, args.n))
    for r in rows:
        if r.check != "growth_series":
            print(f"{r.check:24s} {r.params} {r.measured!r} {r.verdict}")


if __name__ == "__main__":
    run()
