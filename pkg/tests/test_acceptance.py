"""Acceptance criteria, one test each, every one reporting a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the verdicts are
collected in the "acceptance criteria" section of the terminal summary.
"""

import itertools
import json
import math
import time

import numpy as np
import pytest

from annulus_energy import checks, model
from annulus_energy.bvp import Case, classify_case, find_lambda
from annulus_energy.cli import main
from annulus_energy.model import Problem
from annulus_energy.variational import discrete_minimize, el_residual, total_energy

GEOMETRIES = [(1.0, 2.0, 1.0, 3.0), (1.0, 3.0, 2.0, 3.0), (1.0, 1.5, 0.5, 2.5)]
INSTANCES = [Problem(n, *g, alpha) for n, g, alpha in
             itertools.product((2, 3, 4), GEOMETRIES, (0.3, 0.7))]


@pytest.fixture(scope="module")
def solved():
    out = {}
    for p in INSTANCES:
        start = time.perf_counter()
        sol = find_lambda(p)
        out[p] = (sol, time.perf_counter() - start)
    return out


def test_c1_conformal_exactness(verdict):
    worst_lam = worst_H = worst_E = worst_t = 0.0
    for n, c in itertools.product((2, 3, 4, 5), (0.5, 1.0, 3.0)):
        p = Problem(n, 1, 2, c, 2 * c)
        closed = p.omega * n ** (n / 2) * (p.a * c**n + p.b) * (2**n - 1) / n
        for shortcut in (True, False):
            start = time.perf_counter()
            sol = find_lambda(p, shortcut=shortcut, lam0=None if shortcut else 1.3 * c)
            energy = total_energy(sol.profile, p).total
            worst_t = max(worst_t, time.perf_counter() - start)
            worst_lam = max(worst_lam, abs(sol.lam - c))
            worst_H = max(worst_H, float(np.max(np.abs(sol.profile.H - c * sol.profile.grid))))
            worst_E = max(worst_E, abs(energy - closed) / closed)
    ok = worst_lam < 1e-8 and worst_H < 1e-8 and worst_E < 1e-8 and worst_t < 1.0
    verdict("criterion 1 (conformal exactness)", ok,
            f"max |lam-c| {worst_lam:.1e}, max |H-cs| {worst_H:.1e}, "
            f"energy rel err {worst_E:.1e}, slowest {worst_t:.2f} s "
            "(shortcut and full shooting)")


def test_c2_boundary_values(solved, verdict):
    worst_end = worst_restart = worst_t = 0.0
    inner_exact = True
    for p, (sol, seconds) in solved.items():
        prof = sol.profile
        worst_end = max(worst_end, abs(prof.H[-1] - p.R_star) / p.R_star)
        inner_exact &= bool(prof.H[0] == p.r_star)
        worst_t = max(worst_t, seconds)
        for lam0 in (0.25 * sol.lam, 4.0 * sol.lam):
            again = find_lambda(p, lam0=lam0).lam
            worst_restart = max(worst_restart, abs(again - sol.lam) / sol.lam)
    ok = worst_end < 1e-8 and inner_exact and worst_restart < 1e-8 and worst_t < 5.0
    verdict("criterion 2 (boundary values)", ok,
            f"{len(solved)} instances, max |H(R)-R*|/R* {worst_end:.1e}, H(r)=r* exact: "
            f"{inner_exact}, restart spread {worst_restart:.1e}, slowest {worst_t:.2f} s")


def test_c3_stationarity(solved, verdict):
    worst_res = 0.0
    worst_factor = math.inf
    for p, (sol, _) in solved.items():
        res = el_residual(sol.profile)
        worst_res = max(worst_res, res)
        worst_factor = min(worst_factor, el_residual(checks.bump(sol.profile, 0.01)) / res)
    ok = worst_res < 1e-5 and worst_factor >= 10
    verdict("criterion 3 (Euler-Lagrange stationarity)", ok,
            f"max residual {worst_res:.1e}, smallest bump amplification {worst_factor:.1e}")


def test_c4_dominance(solved, verdict):
    worst = math.inf
    worst_far = math.inf
    count = 0
    for i, (p, (sol, _)) in enumerate(solved.items()):
        _, rows = checks.dominance_margins(p, sol, trials=100, seed=1000 + i)
        count += len(rows)
        worst = min(worst, min(r[2] for r in rows))
        far = [r[2] for r in rows if r[1] >= 1e-3]
        worst_far = min(worst_far, min(far, default=math.inf))
    ok = worst >= 0 and worst_far >= 1e-6
    verdict("criterion 4 (minimality dominance)", ok,
            f"{count} trials, min relative margin {worst:.1e}, "
            f"min margin for deviation >= 1e-3 {worst_far:.1e}")


ORACLE_CASES = [Problem(2, 1, 2, 1, 3, 0.3), Problem(3, 1, 3, 2, 3, 0.7),
                Problem(4, 1, 1.5, 0.5, 2.5, 0.3)]


@pytest.mark.slow
def test_c5_oracle_convergence(verdict):
    details = []
    ok = True
    for p in ORACLE_CASES:
        sol = find_lambda(p)
        base = total_energy(sol.profile).total
        energies = []
        for grid in (128, 256, 512):
            start = time.perf_counter()
            res = discrete_minimize(p, grid)
            seconds = time.perf_counter() - start
            energies.append(res.energy)
        gap = abs(res.energy - base) / base
        oracle_H = np.interp(sol.profile.grid, res.profile.grid, res.profile.H)
        dev = float(np.max(np.abs(oracle_H - sol.profile.H))) / (p.R_star - p.r_star)
        monotone = all(b <= a for a, b in zip(energies, energies[1:]))
        ok &= monotone and gap < 5e-3 and dev < 1e-2 and seconds < 60
        details.append(f"n={p.n}: gap {gap:.1e}, dev {dev:.1e}, "
                       f"non-increasing {monotone}, {seconds:.1f} s")
    verdict("criterion 5 (oracle convergence)", ok, "; ".join(details))


def test_c6_reduced_flow(verdict):
    results = []
    for n in (2, 3, 4):
        p = Problem(n, 1, 2, 1, 3, 0.4)
        results += [checks.check_flux_monotone(p), checks.check_q_monotone(p),
                    checks.check_g_negative(p, count=10_000)]
    ok = all(c.ok for c in results)
    verdict("criterion 6 (reduced flow)", ok,
            "; ".join(f"{c.name}: {c.detail}" for c in results[-3:]) + " (n=4 shown; n=2,3 too)")


def test_c7_asymptotics(verdict):
    # G depends on the weights only through b/a; a = b is the flow's own scale
    balanced = [0.0, 0.0, 0.0]
    for n in (2, 3, 5):
        devs = checks.asymptotic_deviations(Problem(n, 1, 2, 1, 2, 0.5))
        balanced = [max(w, d) for w, d in zip(balanced, devs)]
    # the O(t) corrections grow with b/a, so weighted instances use t scaled by it
    scaled = [0.0, 0.0]
    raw = 0.0
    for n, g in itertools.product((2, 3, 5), GEOMETRIES):
        p = Problem(n, *g, 0.5)
        rho = max(p.a / p.b, p.b / p.a)
        devs = checks.asymptotic_deviations(p, t_small=1e-6 / rho, t_large=1e6 * rho)
        scaled = [max(w, d) for w, d in zip(scaled, devs[:2])]
        raw = max(raw, checks.asymptotic_deviations(p)[0])
    ok = (balanced[0] < 1e-3 and balanced[1] < 1e-3 and balanced[2] < 1e-4
          and max(scaled) < 1e-3)
    verdict("criterion 7 (asymptotic limits)", ok,
            f"a=b, n=2,3,5: t=1e-6 dev {balanced[0]:.2e}, t=1e6 dev {balanced[1]:.2e}, "
            f"|G(t,1e8)+1| {balanced[2]:.1e}; weighted geometries at t/rho, t*rho: "
            f"{max(scaled):.2e} (unscaled t=1e-6 worst {raw:.2e})")


def test_c8_convexity_and_derivatives(verdict):
    min_kk = math.inf
    worst = 0.0
    for n in (2, 3, 4, 5):
        p = Problem(n, 1, 2, 1, 3, 0.6)
        s, H, K = checks.random_points(10_000, seed=n, low=1e-2, high=1e2)
        min_kk = min(min_kk, float(np.min(model.lagrangian_d2KK(s, H, K, p))))
        worst = max(worst, max(checks.derivative_errors(p)))
    ok = min_kk > 0 and worst < 1e-6
    verdict("criterion 8 (convexity and partials)", ok,
            f"min L_KK {min_kk:.2e} over 4e4 points, max partial rel err {worst:.1e}")


def test_c9_sign_structure(solved, verdict):
    nonlinear = 0
    worst = 0.0
    ok = True
    for p, (sol, _) in solved.items():
        tag = classify_case(sol.profile)
        if tag.tag is Case.LINEAR:
            continue
        nonlinear += 1
        gap = sol.profile.gap()
        single = bool(np.all(gap > 0) or np.all(gap < 0))
        step = np.diff(sol.profile.H / sol.profile.grid)
        rising = tag.tag is Case.EXPANDING
        ok &= single and bool(np.all(step > 0) if rising else np.all(step < 0))
        worst = max(worst, checks.log_gap_mismatch(sol.profile))
    ok = ok and worst < 1e-4 and nonlinear > 0
    verdict("criterion 9 (sign structure)", ok,
            f"{nonlinear} non-linear instances, single sign and tag/monotonicity agree: "
            f"{ok}, max log-derivative mismatch {worst:.1e}")


def test_c10_planar_crosscheck(tmp_path, capsys, verdict):
    path = tmp_path / "verify.json"
    code = main(["verify", "--n", "2", "--r", "1", "--R", "2", "--r-star", "1",
                 "--R-star", "3", "--trials", "0", "--oracle-grid", "0",
                 "--report", str(path)])
    capsys.readouterr()
    report = json.loads(path.read_text())["planar_crosscheck"]
    readings = ("planar_raw_weights", "planar_normalised_weights")
    produced = code == 0 and all(k in report for k in readings) and report["points"] == 1000
    ok = produced and report["derived_M_vs_lagrangian"]["agrees"]
    detail = ", ".join(f"{k} max rel diff {report[k]['max_rel_diff']:.1e}"
                       for k in ("derived_M_vs_lagrangian", *readings))
    verdict("criterion 10 (planar cross-check report)", ok, detail)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
