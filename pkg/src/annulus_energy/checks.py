"""Invariant checks run by ``annulus-energy verify``.

Each check returns a :class:`Check` with status ``pass``, ``fail`` or
``skip``; nothing here raises on a failed property.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import model
from .bvp import (Case, classify_case, find_lambda, q_value, shoot, solve_el_direct,
                  solve_reduced, ShootingResult)
from .model import Problem
from .variational import discrete_minimize, el_residual, random_trials, total_energy

PASS, FAIL, SKIP = "pass", "fail", "skip"


@dataclass
class Check:
    name: str
    status: str
    detail: str = ""
    data: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status != FAIL


def random_points(count: int, seed: int, low: float = 1e-2, high: float = 1e2):
    """Log-uniform positive triples ``(s, H, K)``."""
    rng = np.random.default_rng(seed)
    return tuple(np.exp(rng.uniform(math.log(low), math.log(high), count)) for _ in range(3))


def _status(ok: bool) -> str:
    return PASS if ok else FAIL


# --- model ------------------------------------------------------------------------

def check_g_negative(problem: Problem, count: int = 10_000, seed: int = 0) -> Check:
    t, y, _ = random_points(count, seed, 1e-3, 1e3)
    g = model.g_rhs(t, y, problem)
    worst = float(np.max(g))
    return Check("G < 0", _status(worst < 0 and np.all(np.isfinite(g))),
                 f"max G over {count} points = {worst:.3e}")


def asymptotic_deviations(problem: Problem, values=(0.5, 1.0, 2.0),
                          t_small: float = 1e-6, t_large: float = 1e6):
    small = [abs(t_small * model.g_rhs(t_small, A, problem)
                 / model.t_g_limit_small(A, problem) - 1) for A in values]
    large = [abs(t_large * model.g_rhs(t_large, B, problem)
                 / model.t_g_limit_large(B, problem) - 1) for B in values]
    slope = [abs(model.g_rhs(t, 1e8, problem) + 1) for t in values]
    return max(small), max(large), max(slope)


def check_asymptotics(problem: Problem) -> Check:
    # the O(t) corrections scale with the weight ratio
    rho = max(problem.a / problem.b, problem.b / problem.a)
    t_small, t_large = 1e-6 / rho, 1e6 * rho
    small, large, slope = asymptotic_deviations(problem, t_small=t_small, t_large=t_large)
    ok = small < 1e-3 and large < 1e-3 and slope < 1e-4
    return Check("asymptotics of t G", _status(ok),
                 f"t={t_small:.1e} dev {small:.2e}, t={t_large:.1e} dev {large:.2e}, "
                 f"|G(t,1e8)+1| {slope:.2e}")


def fd_partials(problem: Problem, s, H, K, step: float = 1e-5):
    """Central differences of the Lagrangian with relative steps (5-point for ``L_KK``)."""
    L = lambda s_, H_, K_: model.lagrangian(s_, H_, K_, problem)
    hK, hH = step * K, step * H
    dK = (L(s, H, K + hK) - L(s, H, K - hK)) / (2 * hK)
    dH = (L(s, H + hH, K) - L(s, H - hH, K)) / (2 * hH)
    h2 = 1e-3 * K
    d2 = (-L(s, H, K + 2 * h2) + 16 * L(s, H, K + h2) - 30 * L(s, H, K)
          + 16 * L(s, H, K - h2) - L(s, H, K - 2 * h2)) / (12 * h2**2)
    return dK, dH, d2


def _with_weights(problem: Problem, a: float, b: float) -> Problem:
    out = replace(problem)
    object.__setattr__(out, "a", a)
    object.__setattr__(out, "b", b)
    return out


def partial_scales(problem: Problem, s, H, K):
    """Magnitudes of the two additive pieces of each partial (no cancellation)."""
    a_only = _with_weights(problem, problem.a, 0.0)
    b_only = _with_weights(problem, 0.0, problem.b)
    out = []
    for fn in (model.lagrangian_dK, model.lagrangian_dH, model.lagrangian_d2KK):
        out.append(np.abs(fn(s, H, K, a_only)) + np.abs(fn(s, H, K, b_only)))
    return out


def derivative_errors(problem: Problem, count: int = 1000, seed: int = 1):
    s, H, K = random_points(count, seed, 0.2, 5.0)
    fd = fd_partials(problem, s, H, K)
    exact = (model.lagrangian_dK(s, H, K, problem), model.lagrangian_dH(s, H, K, problem),
             model.lagrangian_d2KK(s, H, K, problem))
    scales = partial_scales(problem, s, H, K)
    return [float(np.max(np.abs(f - e) / sc)) for f, e, sc in zip(fd, exact, scales)]


def check_derivatives(problem: Problem) -> Check:
    errs = derivative_errors(problem)
    return Check("partials vs finite differences", _status(max(errs) < 1e-6),
                 "max rel err dK {:.1e}, dH {:.1e}, dKK {:.1e}".format(*errs))


def check_convexity(problem: Problem, count: int = 10_000, seed: int = 2) -> Check:
    s, H, K = random_points(count, seed)
    d2 = model.lagrangian_d2KK(s, H, K, problem)
    return Check("L convex in slope", _status(bool(np.all(d2 > 0))),
                 f"min L_KK = {float(np.min(d2)):.3e}")


def check_coercivity(problem: Problem) -> Check:
    s = np.linspace(problem.r, problem.R, 9)[:, None, None]
    H = np.linspace(problem.r_star, problem.R_star, 9)[None, :, None]
    K = np.logspace(-4, 4, 161)[None, None, :]
    ratio = model.lagrangian(s, H, K, problem) / (K**problem.n + K ** (1 - problem.n))
    low = float(np.min(ratio))
    return Check("coercivity", _status(low > 0 and math.isfinite(low)),
                 f"min L/(K^n + K^(1-n)) = {low:.3e}")


def check_duality(problem: Problem, count: int = 1000, seed: int = 3) -> Check:
    s, H, K = random_points(count, seed)
    lhs = model.distortion_density(s, H, K, problem)
    swapped = _with_weights(problem, problem.b, problem.a)
    rhs = K * model.energy_density(H, s, 1.0 / K, swapped)
    err = float(np.max(np.abs(lhs - rhs) / np.abs(lhs)))
    return Check("energy/distortion duality", _status(err < 1e-12), f"max rel err {err:.1e}")


# --- reduced flow and shooting ---------------------------------------------------------

def check_flux_monotone(problem: Problem, lams=(0.5, 1.0, 2.0)) -> Check:
    worst = -math.inf
    for lam in lams:
        curve = solve_reduced(lam, lam / 20, lam * 20, problem)
        F = curve.f_nodes()
        worst = max(worst, float(np.max(np.diff(F))))
    return Check("F_lam decreasing", _status(worst < 0), f"max adjacent increment {worst:.2e}")


def check_q_monotone(problem: Problem, ts=(0.5, 2.0), points: int = 20) -> Check:
    lams = np.logspace(-1, 1, points)
    worst = math.inf
    for t in ts:
        q = np.array([q_value(lam, t, problem) for lam in lams])
        worst = min(worst, float(np.min(np.diff(q))))
    return Check("Q(lam) increasing", _status(worst > 0), f"min adjacent increment {worst:.2e}")


def check_shoot_monotone(problem: Problem, lam_star: float, points: int = 20) -> Check:
    lams = lam_star * np.logspace(-1.5, 1.5, points)
    vals = np.array([shoot(lam, problem) for lam in lams])
    ok = bool(np.all(np.diff(vals) > 0)) and vals[0] < 0 < vals[-1]
    return Check("H_lam(R) increasing and brackets R*", _status(ok),
                 f"{points} shots over 3 decades")


def check_boundary(problem: Problem, sol: ShootingResult) -> Check:
    prof = sol.profile
    err_end = abs(prof.H[-1] - problem.R_star) / problem.R_star
    ok = err_end < 1e-8 and prof.H[0] == problem.r_star
    return Check("boundary values", _status(ok),
                 f"|H(R)-R*|/R* = {err_end:.1e}, lam* = {sol.lam!r}")


def bump(profile, amplitude: float = 0.01):
    """Smooth perturbation ``amplitude (R*-r*) sin(pi x)`` with matching slope."""
    p = profile.problem
    x = (profile.grid - p.r) / (p.R - p.r)
    span = p.R_star - p.r_star
    H = profile.H + amplitude * span * np.sin(np.pi * x)
    K = profile.K + amplitude * span * np.pi / (p.R - p.r) * np.cos(np.pi * x)
    return replace(profile, H=H, K=K)


def check_stationarity(problem: Problem, sol: ShootingResult) -> Check:
    res = el_residual(sol.profile)
    bumped = el_residual(bump(sol.profile))
    if problem.is_conformal:
        ok = res < 1e-5 and bumped > 1e-5
    else:
        ok = res < 1e-5 and bumped >= 10 * res
    return Check("Euler-Lagrange residual", _status(ok),
                 f"solution {res:.2e}, 1% bump {bumped:.2e}")


def log_gap_mismatch(profile) -> float:
    """Max relative mismatch of ``d/ds log|H - sH'|`` against ``-s M``."""
    s = profile.grid
    h = s[1] - s[0]
    g = np.log(np.abs(profile.gap()))
    dg = (g[:-4] - 8 * g[1:-3] + 8 * g[3:-1] - g[4:]) / (12 * h)
    target = -s * model.m_coeff(s, profile.H, profile.K, profile.problem)
    target = target[2:-2]
    return float(np.max(np.abs(dg - target) / np.abs(target)))


def check_case_structure(problem: Problem, sol: ShootingResult) -> Check:
    tag = classify_case(sol.profile)
    if tag.tag is Case.LINEAR:
        return Check("sign structure of H - sH'", PASS, "linear profile")
    ratio = sol.profile.H / sol.profile.grid
    step = np.diff(ratio)
    monotone = np.all(step > 0) if tag.tag is Case.EXPANDING else np.all(step < 0)
    mismatch = log_gap_mismatch(sol.profile)
    ok = bool(monotone) and mismatch < 1e-4
    return Check("sign structure of H - sH'", _status(ok),
                 f"{tag.tag.value}, c = {tag.c:.6g}, log-derivative mismatch {mismatch:.1e}")


def check_two_formulations(problem: Problem, sol: ShootingResult) -> Check:
    direct = solve_el_direct(sol.profile.K0, problem, len(sol.profile.grid))
    dev = float(np.max(np.abs(direct.H - sol.profile.H) / sol.profile.H))
    return Check("reduced flow vs direct Euler-Lagrange", _status(dev < 1e-7),
                 f"max rel deviation {dev:.1e}")


# --- minimality -------------------------------------------------------------------------

def dominance_margins(problem: Problem, sol: ShootingResult, trials: int, seed: int):
    base = total_energy(sol.profile).total
    span = problem.R_star - problem.r_star
    rows = []
    for tr in random_trials(problem, trials, seed, solution=sol.profile):
        e = total_energy(tr).total
        dev = float(np.max(np.abs(tr.H - sol.profile.H))) / span
        rows.append((tr.provenance, dev, (e - base) / e))
    return base, rows


def check_dominance(problem: Problem, sol: ShootingResult, trials: int, seed: int) -> Check:
    if trials <= 0:
        return Check("dominance over trial profiles", SKIP, "no trials requested")
    _, rows = dominance_margins(problem, sol, trials, seed)
    beaten = [r for r in rows if r[2] < -1e-9]
    weak = [r for r in rows if r[1] >= 1e-3 and r[2] < 1e-6]
    ok = not beaten and not weak
    worst = min(r[2] for r in rows)
    return Check("dominance over trial profiles", _status(ok),
                 f"{trials} trials, min relative margin {worst:.2e}")


ORACLE_SLACK = 1e-8


def check_oracle(problem: Problem, sol: ShootingResult, grid: int) -> Check:
    if grid <= 0:
        return Check("discrete oracle", SKIP, "oracle disabled")
    base = total_energy(sol.profile).total
    res = discrete_minimize(problem, grid)
    rel = (res.energy - base) / base
    oracle_H = np.interp(sol.profile.grid, res.profile.grid, res.profile.H)
    dev = float(np.max(np.abs(oracle_H - sol.profile.H))) / (problem.R_star - problem.r_star)
    ok = -ORACLE_SLACK <= rel < 5e-3 and dev < 1e-2
    return Check("discrete oracle", _status(ok),
                 f"grid {grid}: relative energy gap {rel:.2e}, profile deviation {dev:.1e}, "
                 f"{res.sweeps} sweeps")


# --- planar cross-check -------------------------------------------------------------------

def planar_crosscheck(problem: Problem, count: int = 1000, seed: int = 4) -> dict:
    """Compare the derived coefficient with alternative closed forms in the plane.

    Runs on the two-dimensional instance with the same radii and weight.
    Reports median/max relative differences for the classical planar
    coefficient with raw weights (alpha, beta) and with normalised weights
    (a, b), for the variant coefficient, the variant ``L_KK`` and both sign
    conventions of the equilibrium equation.
    """
    plane = replace(problem, n=2)
    s, H, K = random_points(count, seed, 0.2, 5.0)
    M = model.m_coeff(s, H, K, plane)
    acc = model.el_acceleration(s, H, K, plane)

    def stats(other, ref):
        rel = np.abs(other - ref) / np.abs(ref)
        return {"median_rel_diff": float(np.median(rel)), "max_rel_diff": float(np.max(rel)),
                "agrees": bool(np.max(rel) < 1e-10)}

    return {
        "points": count,
        "seed": seed,
        "derived_M_vs_lagrangian": stats((H - s * K) * M, acc),
        "opposite_sign_vs_lagrangian": stats((s * K - H) * M, acc),
        "planar_raw_weights": stats(
            model.planar_coefficient(s, H, K, plane.alpha, plane.beta), M),
        "planar_normalised_weights": stats(
            model.planar_coefficient(s, H, K, plane.a, plane.b), M),
        "variant_M": stats(model.m_coeff_variant(s, H, K, problem), model.m_coeff(s, H, K, problem)),
        "variant_d2KK": stats(model.d2KK_variant(s, H, K, problem),
                              model.lagrangian_d2KK(s, H, K, problem)),
        "reduced_G_vs_M": stats(-s**2 * model.m_coeff(s, H, K, problem),
                                model.g_rhs(H / s, K, problem)),
    }


def check_planar(problem: Problem, count: int = 1000, seed: int = 4) -> Check:
    report = planar_crosscheck(problem, count, seed)
    consistent = (report["derived_M_vs_lagrangian"]["agrees"]
                  and report["reduced_G_vs_M"]["agrees"])
    lines = [f"{k}: max rel diff {v['max_rel_diff']:.2e}"
             for k, v in report.items() if isinstance(v, dict)]
    return Check("planar coefficient cross-check", _status(consistent),
                 "; ".join(lines), {"report": report})


# --- suite ----------------------------------------------------------------------------------

def run_all(problem: Problem, trials: int = 100, oracle_grid: int = 128, seed: int = 0,
            tol: float = 1e-9, log: Callable[[Check], None] | None = None) -> list[Check]:
    results = []

    def record(fn, *args):
        start = time.perf_counter()
        try:
            chk = fn(*args)
        except Exception as exc:  # a crash is a failed check, reported by name
            chk = Check(getattr(fn, "__name__", "check"), FAIL, f"{type(exc).__name__}: {exc}")
        chk.data.setdefault("seconds", time.perf_counter() - start)
        results.append(chk)
        if log:
            log(chk)

    for fn in (check_g_negative, check_asymptotics, check_convexity, check_derivatives,
               check_coercivity, check_duality, check_flux_monotone, check_q_monotone):
        record(fn, problem)
    sol = find_lambda(problem, tol)
    record(check_boundary, problem, sol)
    if not problem.is_conformal:
        record(check_shoot_monotone, problem, sol.lam)
    record(check_stationarity, problem, sol)
    record(check_case_structure, problem, sol)
    record(check_two_formulations, problem, sol)
    record(check_dominance, problem, sol, trials, seed)
    record(check_oracle, problem, sol, oracle_grid)
    record(check_planar, problem)
    return results
