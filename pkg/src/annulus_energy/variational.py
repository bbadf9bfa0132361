"""Energy evaluation and minimality checks for radial profiles.

A profile is the piecewise cubic Hermite interpolant of its node values ``H``
and slopes ``K``.  Its total energy ``omega * int_r^R L(s, H, H') ds`` is
integrated with 5-point Gauss-Legendre on every grid cell.  The same discrete
functional serves the shooting solution, random competitors and the
coordinate-descent oracle, so their energies are directly comparable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bvp import CaseTag, CaseViolation, Profile, classify_case
from .model import Problem, distortion_density, energy_density, lagrangian_dH, lagrangian_dK

GAUSS_ORDER = 5
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class EvaluationError(ValueError):
    """Non-finite integrand: the profile is not an admissible stretching."""


@dataclass(frozen=True)
class TrialProfile:
    grid: np.ndarray
    H: np.ndarray
    K: np.ndarray
    problem: Problem
    provenance: str = "random"

    def gap(self) -> np.ndarray:
        return self.H - self.grid * self.K


@dataclass(frozen=True)
class EnergyReport:
    total: float
    energy_term: float
    distortion_term: float
    el_residual: float
    case: CaseTag | None = None
    lambda_star: float | None = None


class HermiteQuadrature:
    """Gauss points of every cell of ``grid`` and the Hermite basis there."""

    def __init__(self, grid: np.ndarray, order: int = GAUSS_ORDER):
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 1 or len(grid) < 2 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing with >= 2 nodes")
        x, w = np.polynomial.legendre.leggauss(order)
        u = 0.5 * (x + 1.0)
        self.grid = grid
        self.h = np.diff(grid)[:, None]
        self.s = grid[:-1, None] + self.h * u[None, :]
        self.weights = 0.5 * w[None, :] * self.h
        self.b00 = (1 + 2 * u) * (1 - u) ** 2
        self.b10 = u * (1 - u) ** 2
        self.b01 = u**2 * (3 - 2 * u)
        self.b11 = u**2 * (u - 1)
        self.d00 = 6 * u**2 - 6 * u
        self.d10 = 3 * u**2 - 4 * u + 1
        self.d01 = -6 * u**2 + 6 * u
        self.d11 = 3 * u**2 - 2 * u

    def interpolate(self, H, K):
        H0, H1 = H[:-1, None], H[1:, None]
        K0, K1 = K[:-1, None], K[1:, None]
        h = self.h
        Hg = self.b00 * H0 + self.b10 * h * K0 + self.b01 * H1 + self.b11 * h * K1
        Kg = (self.d00 * H0 + self.d10 * h * K0 + self.d01 * H1 + self.d11 * h * K1) / h
        return Hg, Kg

    def cell_energies(self, H, K, problem: Problem):
        """Per-cell (energy, distortion) contributions, ``inf`` where inadmissible."""
        Hg, Kg = self.interpolate(H, K)
        bad = np.any((Kg <= 0) | (Hg <= 0), axis=1)
        Kg = np.where(Kg > 0, Kg, 1.0)
        Hg = np.where(Hg > 0, Hg, 1.0)
        scale = problem.omega * self.weights
        e = np.sum(scale * energy_density(self.s, Hg, Kg, problem), axis=1)
        d = np.sum(scale * distortion_density(self.s, Hg, Kg, problem), axis=1)
        e[bad] = np.inf
        d[bad] = np.inf
        return e, d

    def energy(self, H, K, problem: Problem) -> float:
        e, d = self.cell_energies(H, K, problem)
        return float(np.sum(e) + np.sum(d))


def _fd_slope(H, h):
    return np.gradient(H, h, edge_order=2)


def _is_uniform(grid) -> bool:
    d = np.diff(grid)
    return bool(np.all(np.abs(d - d.mean()) <= 1e-9 * d.mean()))


def el_residual(profile, problem: Problem | None = None) -> float:
    """Largest relative defect of ``L_H = d/ds L_K`` over interior nodes.

    ``d/ds`` is the fourth-order central difference on the (uniform) grid.
    """
    problem = problem or profile.problem
    s, H, K = profile.grid, profile.H, profile.K
    if len(s) < 16:
        raise ValueError("el_residual needs at least 16 nodes")
    if not _is_uniform(s):
        raise ValueError("el_residual needs a uniform grid")
    h = s[1] - s[0]
    LK = lagrangian_dK(s, H, K, problem)
    LH = lagrangian_dH(s, H, K, problem)
    dLK = (LK[:-4] - 8 * LK[1:-3] + 8 * LK[3:-1] - LK[4:]) / (12 * h)
    LH = LH[2:-2]
    floor = 1e-12 * max(np.max(np.abs(LH)), np.max(np.abs(dLK)), 1e-300)
    return float(np.max(np.abs(LH - dLK) / (np.abs(LH) + np.abs(dLK) + floor)))


def total_energy(profile, problem: Problem | None = None,
                 lambda_star: float | None = None) -> EnergyReport:
    problem = problem or profile.problem
    quad = HermiteQuadrature(profile.grid)
    e, d = quad.cell_energies(np.asarray(profile.H), np.asarray(profile.K), problem)
    energy_term, distortion_term = float(np.sum(e)), float(np.sum(d))
    if not (math.isfinite(energy_term) and math.isfinite(distortion_term)):
        raise EvaluationError("integrand is not finite on this profile")
    try:
        residual = el_residual(profile, problem)
    except ValueError:
        residual = math.nan
    try:
        case = classify_case(profile)
    except CaseViolation:
        case = None
    if lambda_star is None and isinstance(profile, Profile) and math.isfinite(profile.lam):
        lambda_star = profile.lam
    return EnergyReport(energy_term + distortion_term, energy_term, distortion_term,
                        residual, case, lambda_star)


# --- competitors ---------------------------------------------------------------------

def _cumulative(grid, density):
    """Cumulative integral of ``density`` from ``grid[0]``, Gauss-Legendre per cell."""
    quad = HermiteQuadrature(grid)
    cells = np.sum(quad.weights * density(quad.s), axis=1)
    return np.concatenate([[0.0], np.cumsum(cells)])


def _from_density(problem, grid, density, provenance):
    cum = _cumulative(grid, density)
    span = problem.R_star - problem.r_star
    H = problem.r_star + span * cum / cum[-1]
    H[-1] = problem.R_star
    K = span * density(grid) / cum[-1]
    return TrialProfile(grid.copy(), H, K, problem, provenance)


def random_trials(problem: Problem, count: int, seed: int,
                  solution: Profile | None = None,
                  grid: np.ndarray | None = None) -> list[TrialProfile]:
    """Seeded monotone competitors with the solution's boundary values.

    Families rotate between smooth random densities, normalised cumulative
    sums of positive random increments, a regularised power law and (when a
    solution is given) smooth perturbations of that solution.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if grid is None:
        grid = solution.grid if solution is not None else np.linspace(problem.r, problem.R, 512)
    rng = np.random.default_rng(seed)
    width = problem.R - problem.r
    families = ["smooth", "increments", "power"] + (["perturbation"] if solution else [])
    trials = []
    for i in range(count):
        kind = families[i % len(families)]
        if kind == "smooth":
            modes = rng.integers(1, 6)
            coef = rng.normal(0.0, 0.6 / np.arange(1, modes + 1))
            phase = rng.uniform(0, 2 * np.pi, modes)

            def density(s, coef=coef, phase=phase):
                x = (s - problem.r) / width
                k = np.arange(1, len(coef) + 1)
                return np.exp(np.sum(coef * np.sin(np.pi * k * x[..., None] + phase), axis=-1))

            trials.append(_from_density(problem, grid, density, "random"))
        elif kind == "increments":
            knots = np.linspace(problem.r, problem.R, int(rng.integers(3, 12)))
            incr = rng.uniform(0.2, 1.0, len(knots))

            def density(s, knots=knots, incr=incr):
                return np.interp(s, knots, incr)

            trials.append(_from_density(problem, grid, density, "random"))
        elif kind == "power":
            p = rng.uniform(0.3, 3.0)
            eps = 0.1

            def density(s, p=p, eps=eps):
                return p * ((s - problem.r) / width + eps) ** (p - 1)

            trials.append(_from_density(problem, grid, density, "parametric"))
        else:
            k = int(rng.integers(1, 5))
            x = (grid - problem.r) / width
            span = problem.R_star - problem.r_star
            max_amp = 0.5 * np.min(solution.K) * width / (k * np.pi * span)
            amp = math.exp(rng.uniform(math.log(1e-4), math.log(min(0.05, max_amp))))
            amp *= rng.choice([-1.0, 1.0])
            H = solution.H + amp * span * np.sin(k * np.pi * x)
            K = solution.K + amp * span * k * np.pi / width * np.cos(k * np.pi * x)
            H[0], H[-1] = problem.r_star, problem.R_star
            trials.append(TrialProfile(grid.copy(), H, K, problem, "perturbation"))
    return trials


# --- discrete oracle -----------------------------------------------------------------------

@dataclass
class OracleResult:
    profile: TrialProfile
    energy: float
    converged: bool
    sweeps: int
    history: list[float] = field(default_factory=list)


def _levels(n_cells: int, multilevel: bool):
    """Colour groups of hat directions, coarsest width first.

    A hat of width ``w`` centred at node ``c`` rises linearly on
    ``[max(c-w, 0), c]`` and falls on ``[c, min(c+w, N)]``, so coarse hats
    still reach the fixed end nodes when ``N`` is not a power of two.
    """
    widths = [1]
    if multilevel:
        w = 2
        while w < n_cells:
            widths.append(w)
            w *= 2
    out = []
    for w in reversed(widths):
        centers = np.arange(w, n_cells, w)
        # hats whose affected cells [a-2, b+2) are disjoint share a colour
        spacing = (2 * w + 3) // w + 1
        for colour in range(spacing):
            group = centers[(centers // w) % spacing == colour]
            if len(group):
                out.append(_HatGroup(w, group, n_cells))
    return out


class _HatGroup:
    def __init__(self, w, centers, n_cells):
        self.centers = centers
        self.left = np.maximum(centers - w, 0)
        self.right = np.minimum(centers + w, n_cells)
        offsets = np.arange(-w, w + 1)
        pos = centers[:, None] + offsets[None, :]
        rise = (pos - self.left[:, None]) / (centers - self.left)[:, None]
        fall = (self.right[:, None] - pos) / (self.right - centers)[:, None]
        self.values = np.clip(np.minimum(rise, fall), 0.0, 1.0)
        self.index = np.clip(pos, 0, n_cells)
        self.segments = np.stack([self.left, centers, self.right], axis=1).ravel()
        self.cells = np.stack([np.maximum(self.left - 2, 0),
                               np.minimum(self.right + 2, n_cells)], axis=1).ravel()

    def shift(self, H, theta):
        out = H.copy()
        out[self.index] += theta[:, None] * self.values
        return out

    def feasible(self, H, min_gap):
        """Interval of hat amplitudes keeping every increment >= ``min_gap``."""
        d = np.append(np.diff(H), np.inf)
        mins = np.minimum.reduceat(d, self.segments).reshape(-1, 3)
        lo = (self.centers - self.left) * (min_gap - mins[:, 0])
        hi = (self.right - self.centers) * (mins[:, 1] - min_gap)
        return np.minimum(lo, 0.0), np.maximum(hi, 0.0)


def discrete_minimize(problem: Problem, grid_size: int = 128, max_iters: int = 200,
                      rel_tol: float = 1e-12, delta: float = 1e-6,
                      multilevel: bool = True, golden_iters: int = 40) -> OracleResult:
    """Minimise the discrete energy over interior node values of ``H``.

    Slopes come from finite differences of ``H`` (second-order one-sided at
    the ends, central inside) and enter the same Hermite quadrature as
    ``total_energy``.  Coordinates are hat functions of width ``w`` for
    ``w = 1`` (plain nodal values) and, with ``multilevel``, every coarser
    power of two; each one-dimensional problem is solved by golden-section
    search over the interval keeping ``H[i+1] - H[i] >= delta (R*-r*)/N``.
    Hats with disjoint support are updated together.  Starts from the affine
    profile and stops when a sweep lowers the energy by less than
    ``rel_tol`` relative, or after ``max_iters`` sweeps.
    """
    if grid_size < 32:
        raise ValueError("grid_size must be >= 32")
    grid = np.linspace(problem.r, problem.R, grid_size)
    n_cells = grid_size - 1
    h = grid[1] - grid[0]
    span = problem.R_star - problem.r_star
    min_gap = delta * span / n_cells
    quad = HermiteQuadrature(grid)
    H = problem.r_star + span * (grid - problem.r) / (problem.R - problem.r)
    H[-1] = problem.R_star

    def cells(Hv):
        e, d = quad.cell_energies(Hv, _fd_slope(Hv, h), problem)
        return np.append(e + d, 0.0)

    energy = float(np.sum(cells(H)))
    history = [energy]
    groups = _levels(n_cells, multilevel)
    radius = [np.inf] * len(groups)

    converged = False
    sweeps = 0
    while sweeps < max_iters:
        sweeps += 1
        for k, group in enumerate(groups):
            H, step = _golden_group(H, group, cells, min_gap, radius[k], golden_iters)
            # next search interval: a few times the largest move, never zero
            radius[k] = max(4.0 * step, 1e-3 * min_gap)
        new_energy = float(np.sum(cells(H)))
        history.append(new_energy)
        if energy - new_energy < rel_tol * abs(new_energy):
            energy = new_energy
            converged = True
            break
        energy = new_energy
    trial = TrialProfile(grid, H.copy(), _fd_slope(H, h), problem, "oracle")
    return OracleResult(trial, energy, converged, sweeps, history)


def _golden_group(H, group, cells, min_gap, radius, iters):
    """Golden-section search on every hat of ``group`` at once.

    Returns the updated profile and the largest accepted amplitude.
    """
    lo, hi = group.feasible(H, min_gap)
    a, b = np.maximum(lo, -radius), np.minimum(hi, radius)

    def local(theta):
        return np.add.reduceat(cells(group.shift(H, theta)), group.cells)[::2]

    e0 = local(np.zeros(len(group.centers)))
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = local(x1), local(x2)
    for _ in range(iters):
        left = f1 < f2
        b = np.where(left, x2, b)
        a = np.where(left, a, x1)
        x2n = np.where(left, x1, a + _GOLDEN * (b - a))
        x1n = np.where(left, b - _GOLDEN * (b - a), x2)
        fkeep = np.where(left, f1, f2)
        fprobe = local(np.where(left, x1n, x2n))
        f1 = np.where(left, fprobe, fkeep)
        f2 = np.where(left, fkeep, fprobe)
        x1, x2 = x1n, x2n
    theta = np.where(f1 < f2, x1, x2)
    theta = np.where(np.minimum(f1, f2) < e0, theta, 0.0)
    return group.shift(H, theta), float(np.max(np.abs(theta)))
