"""Symbolic derivation of the radial Euler-Lagrange equation.

Builds the Lagrangian from the pointwise norms of Dh and Dh^{-1}, lets sympy
differentiate it, and compares every closed form used by the package
(partials, L_KK, the coefficient M, the reduced right-hand side G) with the
symbolic result at random points.  Also reports how far the alternative
closed forms kept for the cross-check report are from the symbolic truth.

Run: python3 scripts/derive_el.py [--dims 2 3 4 5] [--points 20] [--seed 0]
"""

import argparse

import numpy as np
import sympy as sp

from annulus_energy import model
from annulus_energy.model import Problem

s, H, K, a, b = sp.symbols("s H K a b", positive=True)


def symbolic_lagrangian(n):
    grad = (n - 1) * H**2 / s**2 + K**2                  # |Dh|^2
    inverse = (n - 1) * s**2 / H**2 + 1 / K**2           # |Dh^{-1}|^2 at h(x)
    jac = K * H ** (n - 1)                               # J_h times s^(n-1)
    half = sp.Rational(n, 2)
    return a * s ** (n - 1) * grad**half + b * jac * inverse**half


def derive(n):
    L = symbolic_lagrangian(n)
    LK, LH = sp.diff(L, K), sp.diff(L, H)
    LKK = sp.diff(LK, K)
    acc = (LH - sp.diff(LK, s) - K * sp.diff(LK, H)) / LKK
    exprs = {"L": L, "L_K": LK, "L_H": LH, "L_KK": LKK, "L_Ks": sp.diff(LK, s),
             "L_KH": sp.diff(LK, H), "H''": acc, "M": acc / (H - s * K)}
    return {k: sp.lambdify((s, H, K, a, b), v, "numpy") for k, v in exprs.items()}


def _problem(n, wa, wb):
    p = Problem(n, 1, 2, 1, 3)
    object.__setattr__(p, "a", wa)
    object.__setattr__(p, "b", wb)
    return p


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", type=int, nargs="+", default=[2, 3, 4, 5, 6])
    ap.add_argument("--points", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)

    ours = {"L": model.lagrangian, "L_K": model.lagrangian_dK, "L_H": model.lagrangian_dH,
            "L_KK": model.lagrangian_d2KK, "L_Ks": model.lagrangian_dKs,
            "L_KH": model.lagrangian_dKH, "H''": model.el_acceleration, "M": model.m_coeff}
    worst_ok = 0.0
    for n in args.dims:
        sym = derive(n)
        sv, Hv, Kv = np.exp(rng.uniform(-1, 1, (3, args.points)))
        wa, wb = np.exp(rng.uniform(-1, 1, 2))
        p = _problem(n, float(wa), float(wb))
        keep = np.abs(Hv - sv * Kv) > 1e-3 * Hv
        sv, Hv, Kv = sv[keep], Hv[keep], Kv[keep]
        line = [f"n={n}"]
        for name, fn in ours.items():
            want = sym[name](sv, Hv, Kv, wa, wb)
            err = float(np.max(np.abs(fn(sv, Hv, Kv, p) - want) / np.abs(want)))
            worst_ok = max(worst_ok, err)
            line.append(f"{name} {err:.0e}")
        G = model.g_rhs(Hv / sv, Kv, p)
        err = float(np.max(np.abs(G + sv**2 * sym["M"](sv, Hv, Kv, wa, wb)) / np.abs(G)))
        worst_ok = max(worst_ok, err)
        line.append(f"G=-s^2M {err:.0e}")
        print("  ".join(line))
        M = sym["M"](sv, Hv, Kv, wa, wb)
        variants = {
            "M with H^(n-1)": (model.m_coeff_variant(sv, Hv, Kv, p), M),
            "L_KK": (model.d2KK_variant(sv, Hv, Kv, p), sym["L_KK"](sv, Hv, Kv, wa, wb)),
            "H'' = (sH'-H) M": ((sv * Kv - Hv) * M, sym["H''"](sv, Hv, Kv, wa, wb)),
        }
        for name, (val, ref) in variants.items():
            rel = np.abs(val - ref) / np.abs(ref)
            print(f"      variant {name}: median rel diff {np.median(rel):.2e}")
        if n == 2:
            for label, (xa, xb) in {"raw weights": (0.5, 0.5),
                                    "normalised weights": (wa, wb)}.items():
                planar = model.planar_coefficient(sv, Hv, Kv, xa, xb)
                rel = np.abs(planar - M) / M
                print(f"      classical planar coefficient, {label}: "
                      f"median rel diff {np.median(rel):.2e}")
    print(f"largest deviation of the package closed forms: {worst_ok:.1e}")
    return 0 if worst_ok < 1e-9 else 1


if __name__ == "__main__":
    raise SystemExit(main())
