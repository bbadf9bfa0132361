"""Shooting solver for the radial equilibrium problem.

Every equilibrium profile with ``H' > 0`` satisfies ``H'(s) = F(H(s)/s)`` for
a decreasing solution ``F`` of the reduced flow ``F' = G(t, F)``.  Each such
``F`` meets the diagonal once, at ``(lam, lam)``, and ``F_lam(t)`` increases
with ``lam``.  So ``lam -> H_lam(R)`` is increasing, and bracketing plus
bisection finds the profile that hits ``H(R) = R*``.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from .integrate import OdeSystem, Termination, Trajectory, integrate, sample
from .model import Problem, el_acceleration, g_rhs_fast, m_coeff

log = logging.getLogger(__name__)

RTOL = 1e-11
ATOL = 1e-13
SHOOT_TOL = 1e-9
GRID_SIZE = 1024
MAX_DOUBLINGS = 60
_LOG_LIMIT = 300.0


class SolverFailure(RuntimeError):
    pass


class NoBracket(SolverFailure):
    pass


class CaseViolation(RuntimeError):
    """``H - sH'`` changes sign on the grid."""


# --- reduced flow ---------------------------------------------------------------

def _reduced_system(problem: Problem) -> OdeSystem:
    # u = log t, v = log F:  dv/du = t G(t, F) / F
    n, a, b = problem.n, problem.a, problem.b

    def rhs(u, v):
        t, F = math.exp(u), math.exp(v[0])
        return (t * g_rhs_fast(t, F, n, a, b) / F,)

    # keeps t^2 and F^2 representable
    def guard(u, v):
        return abs(u) < _LOG_LIMIT and math.isfinite(v[0]) and abs(v[0]) < _LOG_LIMIT

    return OdeSystem(rhs, guard, 1)


@dataclass(frozen=True)
class FluxCurve:
    """The reduced solution through ``(lam, lam)``, sampled on ``[t_lo, t_hi]``."""

    lam: float
    lower: Trajectory   # log t decreasing from log lam
    upper: Trajectory   # log t increasing from log lam
    t_lo: float
    t_hi: float

    @property
    def complete(self) -> bool:
        return self.lower.completed and self.upper.completed

    def t_nodes(self) -> np.ndarray:
        return np.exp(np.concatenate([self.lower.nodes[::-1], self.upper.nodes[1:]]))

    def f_nodes(self) -> np.ndarray:
        v = np.concatenate([self.lower.states[::-1, 0], self.upper.states[1:, 0]])
        return np.exp(v)

    def __call__(self, t):
        u = np.log(np.asarray(t, dtype=float))
        out = np.empty_like(u)
        below = u <= math.log(self.lam)
        if np.any(below):
            out[below] = sample(self.lower, u[below])[:, 0]
        if np.any(~below):
            out[~below] = sample(self.upper, u[~below])[:, 0]
        res = np.exp(out)
        return float(res) if np.ndim(t) == 0 else res


def _flow_piece(problem, lam, t_end, rel_tol, abs_tol):
    u0 = math.log(lam)
    v0 = [math.log(lam)]
    if t_end == lam:
        f = np.array(_reduced_system(problem).rhs(u0, v0))
        return Trajectory(np.array([u0]), np.array([v0]), f[None, :],
                          Termination.REACHED_END)
    return integrate(_reduced_system(problem), u0, v0, math.log(t_end), rel_tol, abs_tol)


def solve_reduced(lam: float, t_lo: float, t_hi: float, problem: Problem,
                  rel_tol: float = RTOL, abs_tol: float = ATOL) -> FluxCurve:
    if not (0 < t_lo <= lam <= t_hi):
        raise ValueError(f"need 0 < t_lo <= lam <= t_hi, got {t_lo}, {lam}, {t_hi}")
    lower = _flow_piece(problem, lam, t_lo, rel_tol, abs_tol)
    upper = _flow_piece(problem, lam, t_hi, rel_tol, abs_tol)
    for piece in (lower, upper):
        if not piece.completed:
            log.warning("reduced flow from lam=%g stopped early: %s", lam,
                        piece.terminal_reason.value)
    return FluxCurve(lam, lower, upper, float(math.exp(lower.x_end)),
                     float(math.exp(upper.x_end)))


def q_value(lam: float, t: float, problem: Problem,
            rel_tol: float = RTOL, abs_tol: float = ATOL) -> float:
    """``F_lam(t)``: the reduced solution through ``(lam, lam)`` evaluated at ``t``."""
    if lam <= 0 or t <= 0:
        raise ValueError("lam and t must be positive")
    if t == lam:
        return float(lam)
    piece = _flow_piece(problem, lam, t, rel_tol, abs_tol)
    if not piece.completed:
        raise SolverFailure(
            f"reduced flow from lam={lam} did not reach t={t}: {piece.terminal_reason.value}")
    return float(math.exp(piece.y_end[0]))


# --- profiles ------------------------------------------------------------------------

@dataclass(frozen=True)
class Profile:
    grid: np.ndarray
    H: np.ndarray
    K: np.ndarray
    lam: float
    problem: Problem

    @property
    def K0(self) -> float:
        return float(self.K[0])

    def gap(self) -> np.ndarray:
        """``H - s H'``, the quantity whose sign fixes the case."""
        return self.H - self.grid * self.K


def _profile_system(problem: Problem) -> OdeSystem:
    n, a, b = problem.n, problem.a, problem.b

    def rhs(s, y):
        H, K = y
        if H <= 0 or K <= 0:
            return (math.nan, math.nan)
        return (K, g_rhs_fast(H / s, K, n, a, b) * (s * K - H) / s**2)

    def guard(s, y):
        return y[0] > 0 and y[1] > 0

    return OdeSystem(rhs, guard, 2)


def _el_system(problem: Problem) -> OdeSystem:
    def rhs(s, y):
        H, K = y
        if H <= 0 or K <= 0:
            return (math.nan, math.nan)
        return (K, el_acceleration(s, H, K, problem))

    return OdeSystem(rhs, lambda s, y: y[0] > 0 and y[1] > 0, 2)


def _run_profile(system, K0, problem, grid, rel_tol, abs_tol):
    traj = integrate(system, problem.r, [problem.r_star, K0], problem.R,
                     rel_tol, abs_tol, x_eval=grid)
    if not traj.completed:
        raise SolverFailure(f"profile integration stopped: {traj.terminal_reason.value}")
    return traj


def uniform_grid(problem: Problem, size: int = GRID_SIZE) -> np.ndarray:
    grid = np.linspace(problem.r, problem.R, size)
    grid[0], grid[-1] = problem.r, problem.R
    return grid


def _profile_from(traj, grid, lam, problem):
    # x_eval forces every grid point to be a node
    idx = np.searchsorted(traj.nodes, grid)
    H, K = traj.states[idx, 0].copy(), traj.states[idx, 1].copy()
    H[0] = problem.r_star
    return Profile(grid.copy(), H, K, float(lam), problem)


def solve_profile(lam: float, problem: Problem, out_grid_size: int = GRID_SIZE,
                  rel_tol: float = RTOL, abs_tol: float = ATOL) -> Profile:
    """Integrate ``H' = F_lam(H/s)``, ``H(r) = r*`` across ``[r, R]``."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    K0 = q_value(lam, problem.r_star / problem.r, problem, rel_tol, abs_tol)
    grid = uniform_grid(problem, out_grid_size)
    traj = _run_profile(_profile_system(problem), K0, problem, grid, rel_tol, abs_tol)
    return _profile_from(traj, grid, lam, problem)


def solve_el_direct(K0: float, problem: Problem, out_grid_size: int = GRID_SIZE,
                    rel_tol: float = RTOL, abs_tol: float = ATOL) -> Profile:
    """Same boundary data, but integrating ``H''`` from the Lagrangian partials."""
    grid = uniform_grid(problem, out_grid_size)
    traj = _run_profile(_el_system(problem), K0, problem, grid, rel_tol, abs_tol)
    return _profile_from(traj, grid, math.nan, problem)


def shoot(lam: float, problem: Problem, rel_tol: float = RTOL,
          abs_tol: float = ATOL) -> float:
    """``H_lam(R) - R*``."""
    K0 = q_value(lam, problem.r_star / problem.r, problem, rel_tol, abs_tol)
    traj = _run_profile(_profile_system(problem), K0, problem, None, rel_tol, abs_tol)
    return float(traj.y_end[0] - problem.R_star)


def linear_profile(problem: Problem, out_grid_size: int = GRID_SIZE) -> Profile:
    c = problem.r_star / problem.r
    grid = uniform_grid(problem, out_grid_size)
    H = c * grid
    H[0], H[-1] = problem.r_star, c * problem.R
    return Profile(grid, H, np.full_like(grid, c), c, problem)


@dataclass(frozen=True)
class ShootingResult:
    lam: float
    profile: Profile
    residual: float
    n_shots: int
    bracket: tuple[float, float]


def find_lambda(problem: Problem, tol: float = SHOOT_TOL, lam0: float | None = None,
                out_grid_size: int = GRID_SIZE, max_doublings: int = MAX_DOUBLINGS,
                rel_tol: float = RTOL, abs_tol: float = ATOL,
                shortcut: bool = True) -> ShootingResult:
    """Locate ``lam*`` with ``|H(R) - R*| < tol R*`` and return its profile.

    With ``shortcut`` a conformal instance returns the exact linear profile
    without shooting.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if shortcut and problem.is_conformal:
        c = problem.r_star / problem.r
        return ShootingResult(c, linear_profile(problem, out_grid_size), 0.0, 0, (c, c))

    def f(lam):
        return shoot(lam, problem, rel_tol, abs_tol)

    if lam0 is None:
        lam0 = math.sqrt(problem.r_star / problem.r * problem.R_star / problem.R)
    target = tol * problem.R_star
    lo = hi = lam0
    f_lo = f_hi = f(lam0)
    shots = 1
    if f_lo < 0:
        while f_hi < 0:
            if shots > max_doublings:
                raise NoBracket(f"no sign change up to lam={hi:g}")
            lo, f_lo = hi, f_hi
            hi *= 2.0
            f_hi = f(hi)
            shots += 1
    elif f_hi > 0:
        while f_lo > 0:
            if shots > max_doublings:
                raise NoBracket(f"no sign change down to lam={lo:g}")
            hi, f_hi = lo, f_lo
            lo *= 0.5
            f_lo = f(lo)
            shots += 1
    bracket = (lo, hi)

    # Illinois false position; a bisection step whenever the bracket stalls
    lam, f_lam = (lo, f_lo) if abs(f_lo) < abs(f_hi) else (hi, f_hi)
    side = 0
    width, stalled = hi - lo, 0
    while abs(f_lam) >= target and hi - lo > 4e-16 * hi:
        if hi / lo > 4.0:
            lam = math.sqrt(lo * hi)
        elif stalled >= 3:
            lam, stalled, side = 0.5 * (lo + hi), 0, 0
        else:
            lam = (lo * f_hi - hi * f_lo) / (f_hi - f_lo)
            if not (lo < lam < hi):
                lam = 0.5 * (lo + hi)
        f_lam = f(lam)
        shots += 1
        if f_lam == 0.0:
            break
        if f_lam < 0:
            lo, f_lo = lam, f_lam
            if side == -1:
                f_hi *= 0.5
            side = -1
        else:
            hi, f_hi = lam, f_lam
            if side == 1:
                f_lo *= 0.5
            side = 1
        if hi - lo > 0.5 * width:
            stalled += 1
        else:
            width, stalled = hi - lo, 0
    if abs(f_lam) >= target:
        raise SolverFailure(f"shooting stalled at lam={lam!r}, residual={f_lam:g}")
    profile = solve_profile(lam, problem, out_grid_size, rel_tol, abs_tol)
    log.debug("lam*=%r after %d shots, residual %.3g", lam, shots, f_lam)
    return ShootingResult(lam, profile, float(profile.H[-1] - problem.R_star), shots, bracket)


# --- case classification ----------------------------------------------------------

class Case(str, enum.Enum):
    """Linear: ``H = cs``.  Expanding / Contracting: ``H/s`` increases / decreases."""

    LINEAR = "Linear"
    EXPANDING = "Expanding"
    CONTRACTING = "Contracting"


@dataclass(frozen=True)
class CaseTag:
    tag: Case
    c: float


def classify_case(profile: Profile, tol: float = 1e-9) -> CaseTag:
    """Sign of ``H - sH'`` over the grid, with the constant ``c`` estimated.

    ``H - sH' = c exp(-int_r^s tau M dtau)``, so ``c`` is recovered at every
    node by undoing the exponential factor and the median is reported.
    """
    problem = profile.problem
    gap = profile.gap()
    if np.max(np.abs(gap)) < tol * problem.R_star:
        return CaseTag(Case.LINEAR, 0.0)
    # d/ds (H/s) = -(H - sH')/s^2
    if np.all(gap < 0):
        tag = Case.EXPANDING
    elif np.all(gap > 0):
        tag = Case.CONTRACTING
    else:
        raise CaseViolation("H - sH' changes sign along the profile")
    s = profile.grid
    integrand = s * m_coeff(s, profile.H, profile.K, problem)
    cumulative = np.concatenate(
        [[0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(s))])
    return CaseTag(tag, float(np.median(gap * np.exp(cumulative))))
