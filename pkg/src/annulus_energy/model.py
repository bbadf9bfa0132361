"""Closed-form quantities for radial stretchings between spherical annuli.

A radial stretching ``h(x) = H(|x|) x/|x|`` of ``A(r, R)`` onto
``A(r*, R*)`` is described pointwise by the radius ``s``, the image radius
``H`` and the slope ``K = H'(s)``.  With

    P = (n-1) H^2 + s^2 K^2,      Q = (n-1) s^2 K^2 + H^2

the integrand of the total energy reads

    L(s, H, K) = (a/s) P^(n/2) + (b/H) K^(1-n) Q^(n/2)

and the equilibrium equation ``L_H = d/ds L_K`` is equivalent to

    H'' = (H - s H') M(s, H, H'),   M > 0.

In the ratio variable ``t = H/s`` with ``y = H'`` the same equation becomes the
first-order flow ``dy/dt = G(t, y) = -(U + V)/W`` and ``G(H/s, K) = -s^2 M``.

All functions accept Python floats or numpy arrays (broadcast together).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class InvalidProblem(ValueError):
    """Bad dimension, geometry or weight."""


class DomainError(ValueError):
    """Argument outside the open positive quadrant."""


def sphere_measure(n: int) -> float:
    """Surface measure of the unit sphere in R^n, ``2 pi^(n/2) / Gamma(n/2)``."""
    if isinstance(n, bool) or int(n) != n or n < 2:
        raise InvalidProblem(f"dimension must be an integer >= 2, got {n!r}")
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def annulus_volume(n: int, r_in: float, r_out: float) -> float:
    if not (0 < r_in < r_out) or not math.isfinite(r_out):
        raise InvalidProblem(f"need 0 < r_in < r_out, got ({r_in}, {r_out})")
    return sphere_measure(n) * (r_out**n - r_in**n) / n


def weights(alpha: float, n: int, r: float, R: float,
            r_star: float, R_star: float) -> tuple[float, float]:
    """Coefficients ``a = alpha/|A*|`` and ``b = (1-alpha)/|A|``."""
    if not (0.0 < alpha < 1.0):
        raise InvalidProblem(f"alpha must lie in (0, 1), got {alpha!r}")
    a = alpha / annulus_volume(n, r_star, R_star)
    b = (1.0 - alpha) / annulus_volume(n, r, R)
    return a, b


@dataclass(frozen=True)
class Problem:
    """One instance: dimension, both annuli and the energy weight."""

    n: int
    r: float
    R: float
    r_star: float
    R_star: float
    alpha: float = 0.5
    beta: float = field(init=False)
    a: float = field(init=False)
    b: float = field(init=False)
    omega: float = field(init=False)

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 2:
            raise InvalidProblem(f"dimension must be an integer >= 2, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        for name in ("r", "R", "r_star", "R_star", "alpha"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise InvalidProblem(f"{name} must be finite")
            object.__setattr__(self, name, val)
        if not (0 < self.r < self.R):
            raise InvalidProblem(f"need 0 < r < R, got r={self.r}, R={self.R}")
        if not (0 < self.r_star < self.R_star):
            raise InvalidProblem(
                f"need 0 < r_star < R_star, got r_star={self.r_star}, R_star={self.R_star}")
        a, b = weights(self.alpha, self.n, self.r, self.R, self.r_star, self.R_star)
        object.__setattr__(self, "beta", 1.0 - self.alpha)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "omega", sphere_measure(self.n))

    @property
    def domain_volume(self) -> float:
        return annulus_volume(self.n, self.r, self.R)

    @property
    def target_volume(self) -> float:
        return annulus_volume(self.n, self.r_star, self.R_star)

    @property
    def is_conformal(self) -> bool:
        """True when ``R/r == R*/r*`` to 1e-12 relative, so ``H = (r*/r) s`` solves."""
        ratio, ratio_star = self.R / self.r, self.R_star / self.r_star
        return abs(ratio - ratio_star) <= 1e-12 * ratio_star


# --- pointwise geometry --------------------------------------------------------

def grad_norm_sq(s, H, K, n):
    """Squared Hilbert-Schmidt norm of Dh."""
    return (n - 1) * H**2 / s**2 + K**2


def jacobian(s, H, K, n):
    return K * (H / s) ** (n - 1)


def inv_norm_sq(s, H, K, n):
    """Squared norm of ``Dh^{-1}`` evaluated at ``h(x)``."""
    return 1.0 / K**2 + (n - 1) * s**2 / H**2


# --- the Lagrangian and its partials -------------------------------------------

def _pq(s, H, K, n):
    return (n - 1) * H**2 + s**2 * K**2, (n - 1) * s**2 * K**2 + H**2


def energy_density(s, H, K, problem: Problem):
    """The ``a``-weighted n-energy part of the Lagrangian."""
    n = problem.n
    return problem.a * s ** (n - 1) * grad_norm_sq(s, H, K, n) ** (n / 2)


def distortion_density(s, H, K, problem: Problem):
    """The ``b``-weighted distortion part, pulled back with the Jacobian."""
    n = problem.n
    return problem.b * H ** (n - 1) * inv_norm_sq(s, H, K, n) ** (n / 2) * K


def lagrangian(s, H, K, problem: Problem):
    return energy_density(s, H, K, problem) + distortion_density(s, H, K, problem)


def lagrangian_dK(s, H, K, problem: Problem):
    n, a, b = problem.n, problem.a, problem.b
    P, Q = _pq(s, H, K, n)
    m = (n - 2) / 2
    return (a * n * s * K * P**m
            + b * (n - 1) * (s**2 * K**2 - H**2) * K ** (-n) * Q**m / H)


def lagrangian_dH(s, H, K, problem: Problem):
    n, a, b = problem.n, problem.a, problem.b
    P, Q = _pq(s, H, K, n)
    m = (n - 2) / 2
    return (a * n * (n - 1) * H * P**m / s
            + b * (n - 1) * (H**2 - s**2 * K**2) * K ** (1 - n) * Q**m / H**2)


def lagrangian_d2KK(s, H, K, problem: Problem):
    n, a, b = problem.n, problem.a, problem.b
    P, Q = _pq(s, H, K, n)
    e = (n - 4) / 2
    return n * (n - 1) * (H**2 + s**2 * K**2) * (a * s * P**e + b * H * K ** (-n - 1) * Q**e)


def lagrangian_dKs(s, H, K, problem: Problem):
    n, a, b = problem.n, problem.a, problem.b
    P, Q = _pq(s, H, K, n)
    e = (n - 4) / 2
    d = s**2 * K**2 - H**2
    return (a * n * K * P**e * (P + (n - 2) * s**2 * K**2)
            + b * (n - 1) * K ** (2 - n) * s * Q**e / H * (2 * Q + (n - 2) * (n - 1) * d))


def lagrangian_dKH(s, H, K, problem: Problem):
    n, a, b = problem.n, problem.a, problem.b
    P, Q = _pq(s, H, K, n)
    e = (n - 4) / 2
    d = s**2 * K**2 - H**2
    return (a * n * (n - 1) * (n - 2) * s * K * H * P**e
            + b * (n - 1) * K ** (-n) * Q**e * (-2 * Q - d * Q / H**2 + (n - 2) * d))


def el_acceleration(s, H, K, problem: Problem):
    """``H''`` solved from ``L_H = L_Ks + K L_KH + H'' L_KK``."""
    num = (lagrangian_dH(s, H, K, problem) - lagrangian_dKs(s, H, K, problem)
           - K * lagrangian_dKH(s, H, K, problem))
    return num / lagrangian_d2KK(s, H, K, problem)


# --- equilibrium coefficient -----------------------------------------------------

def _m_parts(s, H, K, n, a, b, distortion_power):
    P, Q = _pq(s, H, K, n)
    e = (n - 4) / 2
    first = a / s * P**e * ((n - 1) * H**2 + (n - 2) * s * H * K + s**2 * K**2)
    second = (b * H**distortion_power * Q**e * K ** (1 - n)
              * (H**2 + (n - 2) * s * H * K + (n - 1) * s**2 * K**2))
    denom = (H**2 + s**2 * K**2) * (a * s * P**e + b * H * Q**e / K ** (1 + n))
    return first, second, denom


def m_coeff(s, H, K, problem: Problem):
    """Positive coefficient ``M`` in ``H'' = (H - s H') M``."""
    first, second, denom = _m_parts(s, H, K, problem.n, problem.a, problem.b, -1)
    return (first + second) / denom


def m_coeff_variant(s, H, K, problem: Problem):
    """``M`` with ``H^(n-1)`` instead of ``H^(-1)`` in the distortion numerator.

    Kept only for the cross-check report; it does not satisfy the
    equilibrium equation except where the two powers coincide.
    """
    n = problem.n
    first, second, denom = _m_parts(s, H, K, n, problem.a, problem.b, n - 1)
    return (first + second) / denom


def planar_coefficient(s, H, K, wa, wb):
    """Classical planar equilibrium coefficient ``(wa H K + wb s) K^2 / ((wa s K^3 + wb s) s H)``."""
    return (wa * H * K + wb * s) * K**2 / ((wa * s * K**3 + wb * s) * s * H)


def d2KK_variant(s, H, K, problem: Problem):
    """Alternative closed form for ``L_KK`` used only in the cross-check report."""
    n, a, b = problem.n, problem.a, problem.b
    e = (n - 4) / 2
    return (n - 1) * n * (K**2 * s**2 + H**2) * (
        a * (H**2 + (n - 1) * s**2 * K**2 / H**2) ** e * H / K ** (1 + n)
        + b * s * (s**2 * K**2 + (n - 1) * H**2) ** e)


# --- reduced flow ------------------------------------------------------------------

def _check_quadrant(t, y):
    if np.any(np.asarray(t) <= 0) or np.any(np.asarray(y) <= 0):
        raise DomainError("reduced flow is defined only for t > 0, y > 0")


def _uvw(t, y, n, a, b):
    e = (n - 4) / 2
    A = (n - 1) * t**2 + y**2
    B = (n - 1) * y**2 + t**2
    U = a * A**e * ((n - 1) * t**2 + (n - 2) * t * y + y**2)
    V = b * B**e * (t**2 + (n - 2) * t * y + (n - 1) * y**2) / (t * y ** (n - 1))
    W = (t**2 + y**2) * (a * A**e + b * t * B**e / y ** (1 + n))
    return U, V, W


def uvw(t, y, problem: Problem):
    _check_quadrant(t, y)
    return _uvw(t, y, problem.n, problem.a, problem.b)


def g_rhs(t, y, problem: Problem):
    """Right-hand side ``G(t, y) = -(U + V)/W`` of the reduced flow; always negative."""
    _check_quadrant(t, y)
    U, V, W = _uvw(t, y, problem.n, problem.a, problem.b)
    return -(U + V) / W


def g_rhs_fast(t: float, y: float, n: int, a: float, b: float) -> float:
    """Unchecked scalar ``G`` for the integrator's inner loop."""
    U, V, W = _uvw(t, y, n, a, b)
    return -(U + V) / W


def t_g_limit_small(y, problem: Problem):
    """Limit of ``t G(t, y)`` as ``t -> 0`` with ``y`` held fixed."""
    n = problem.n
    return -(problem.b / problem.a) * (n - 1) ** ((n - 2) / 2) * y ** (1 - n)


def t_g_limit_large(y, problem: Problem):
    """Limit of ``t G(t, y)`` as ``t -> inf`` with ``y`` held fixed."""
    n = problem.n
    return -(problem.a / problem.b) * (n - 1) ** ((n - 2) / 2) * y ** (n + 1)
