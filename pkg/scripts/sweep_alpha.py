"""Optimal profiles across the energy weight and the dimension.

For each n and alpha, solves the boundary value problem on one geometry and
records lambda*, the two energy terms, the case tag and the shooting cost.
Writes a csv table (stdout by default).

Run: python3 scripts/sweep_alpha.py --geometry 1 2 1 3 --dims 2 3 4 --output alpha.csv
"""

import argparse
import csv
import sys
import time

import numpy as np

from annulus_energy.bvp import classify_case, find_lambda
from annulus_energy.model import Problem
from annulus_energy.variational import total_energy


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--geometry", type=float, nargs=4, default=[1.0, 2.0, 1.0, 3.0],
                    metavar=("r", "R", "r_star", "R_star"))
    ap.add_argument("--dims", type=int, nargs="+", default=[2, 3, 4, 5])
    ap.add_argument("--alphas", type=int, default=9, help="number of alphas in [0.1, 0.9]")
    ap.add_argument("--output", help="csv path (default: stdout)")
    args = ap.parse_args(argv)

    out = open(args.output, "w", newline="") if args.output else sys.stdout
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["n", "alpha", "lambda_star", "energy_total", "energy_term",
                "distortion_term", "case", "c", "shots", "seconds"])
    for n in args.dims:
        for alpha in np.linspace(0.1, 0.9, args.alphas):
            p = Problem(n, *args.geometry, float(alpha))
            start = time.perf_counter()
            sol = find_lambda(p)
            seconds = time.perf_counter() - start
            rep = total_energy(sol.profile, p, sol.lam)
            tag = classify_case(sol.profile)
            w.writerow([n, repr(float(alpha)), repr(sol.lam), repr(rep.total),
                        repr(rep.energy_term), repr(rep.distortion_term), tag.tag.value,
                        repr(tag.c), sol.n_shots, f"{seconds:.3f}"])
    if args.output:
        out.close()


if __name__ == "__main__":
    main()
