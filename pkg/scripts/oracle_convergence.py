"""Discrete oracle against the shooting solution under grid refinement.

Prints, per instance and grid size, the oracle energy, its relative gap to
the solver energy, the sup-norm profile deviation (relative to R*-r*), the
number of sweeps and the run time.

Run: python3 scripts/oracle_convergence.py --grids 64 128 256 512
"""

import argparse
import time

import numpy as np

from annulus_energy.bvp import find_lambda
from annulus_energy.model import Problem
from annulus_energy.variational import discrete_minimize, total_energy

INSTANCES = [Problem(2, 1, 2, 1, 3, 0.3), Problem(3, 1, 3, 2, 3, 0.7),
             Problem(4, 1, 1.5, 0.5, 2.5, 0.3), Problem(5, 1, 2, 1, 3, 0.5)]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grids", type=int, nargs="+", default=[64, 128, 256, 512])
    ap.add_argument("--single-level", action="store_true",
                    help="nodal coordinates only (much slower to converge)")
    args = ap.parse_args(argv)
    print(f"{'instance':34s} {'grid':>5s} {'energy':>20s} {'gap':>9s} {'dev':>8s} "
          f"{'sweeps':>6s} {'sec':>6s}")
    for p in INSTANCES:
        sol = find_lambda(p)
        base = total_energy(sol.profile).total
        label = f"n={p.n} ({p.r:g},{p.R:g})->({p.r_star:g},{p.R_star:g}) a={p.alpha:g}"
        for grid in args.grids:
            start = time.perf_counter()
            res = discrete_minimize(p, grid, multilevel=not args.single_level)
            sec = time.perf_counter() - start
            oracle_H = np.interp(sol.profile.grid, res.profile.grid, res.profile.H)
            dev = np.max(np.abs(oracle_H - sol.profile.H)) / (p.R_star - p.r_star)
            print(f"{label:34s} {grid:5d} {res.energy:20.15f} {(res.energy - base) / base:9.1e} "
                  f"{dev:8.1e} {res.sweeps:6d} {sec:6.2f}")


if __name__ == "__main__":
    main()
