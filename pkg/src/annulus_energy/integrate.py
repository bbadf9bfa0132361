"""Adaptive Dormand-Prince 5(4) integration with a domain guard.

Small, self-contained explicit integrator.  Every accepted step is stored
together with the right-hand side at the node, so trajectories can be
resampled by cubic Hermite interpolation.  The guard predicate describes the
open region where the right-hand side is defined; leaving it ends the
integration at the last admissible point.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


class Termination(str, enum.Enum):
    REACHED_END = "reached_end"
    GUARD_EXIT = "guard_exit"
    STEP_UNDERFLOW = "step_underflow"
    STEP_LIMIT = "step_limit"


class InvalidStart(ValueError):
    pass


class OutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class OdeSystem:
    """``rhs(x, y) -> dy/dx`` on the region where ``guard(x, y)`` holds."""

    rhs: Callable[[float, np.ndarray], Sequence[float]]
    guard: Callable[[float, np.ndarray], bool] = lambda x, y: True
    dimension: int = 1


@dataclass(frozen=True)
class Trajectory:
    nodes: np.ndarray          # (m,) strictly monotone
    states: np.ndarray         # (m, dim)
    derivs: np.ndarray         # (m, dim), rhs at each node
    terminal_reason: Termination
    n_steps: int = 0
    n_rejected: int = 0

    @property
    def x_end(self) -> float:
        return float(self.nodes[-1])

    @property
    def y_end(self) -> np.ndarray:
        return self.states[-1]

    @property
    def completed(self) -> bool:
        return self.terminal_reason is Termination.REACHED_END


# Dormand & Prince (1980), 5th-order solution with embedded 4th-order estimate.
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
# difference between the 5th- and 4th-order weights
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
# PI controller exponents for a 5th-order pair
_K_I = 0.7 / 5
_K_P = 0.4 / 5


def _rhs(system: OdeSystem, x: float, y: np.ndarray) -> np.ndarray:
    try:
        return np.asarray(system.rhs(x, y), dtype=float)
    except (OverflowError, ZeroDivisionError):
        # treated like a non-finite value: the step is rejected and shrunk
        return np.full(system.dimension, np.nan)


def _dp_step(system, x, y, f0, h):
    """One Dormand-Prince step; returns (y_new, f_new, error_vector)."""
    k = [f0]
    for i in range(1, 7):
        yi = y.copy()
        for j, aij in enumerate(_A[i]):
            if aij:
                yi += h * aij * k[j]
        k.append(_rhs(system, x + _C[i] * h, yi))
    # stage 7 is evaluated at y_new (FSAL)
    y_new = y + h * sum(bi * ki for bi, ki in zip(_B, k) if bi)
    err = h * sum(ei * ki for ei, ki in zip(_E, k) if ei)
    return y_new, k[6], err


def _initial_step(system, x0, y0, f0, direction, rel_tol, abs_tol, span):
    scale = abs_tol + rel_tol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = y0 + direction * h0 * f0
    if not system.guard(x0 + direction * h0, y1):
        return min(h0, 1e-3 * span)
    f1 = _rhs(system, x0 + direction * h0, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, span)


def integrate(system: OdeSystem, x0: float, state0, x1: float,
              rel_tol: float = 1e-10, abs_tol: float = 1e-12,
              max_steps: int = 1_000_000, min_step: float | None = None,
              x_eval: Sequence[float] | None = None) -> Trajectory:
    """Integrate ``system`` from ``x0`` to ``x1`` (either direction).

    Steps are clipped so that every point of ``x_eval`` (which must lie
    between ``x0`` and ``x1``) becomes a stored node.  When the guard fails
    after a step, the exit is localised by bisecting that step to within
    ``abs_tol`` in ``x`` and the last admissible point is stored.
    """
    if rel_tol <= 0 or abs_tol <= 0:
        raise ValueError("tolerances must be positive")
    if x1 == x0:
        raise ValueError("x1 must differ from x0")
    y = np.array(state0, dtype=float).reshape(-1)
    x = float(x0)
    if not system.guard(x, y):
        raise InvalidStart(f"guard fails at the initial point x0={x0}")
    direction = 1.0 if x1 > x0 else -1.0
    span = abs(x1 - x0)
    if min_step is None:
        min_step = 1e-14 * span

    stops = [float(x1)]
    if x_eval is not None:
        xs = np.asarray(x_eval, dtype=float)
        if np.any(direction * (xs - x0) < 0) or np.any(direction * (xs - x1) > 0):
            raise OutOfRange("x_eval points must lie between x0 and x1")
        stops = sorted(set(xs.tolist()) | {float(x1)}, key=lambda v: direction * v)
        stops = [v for v in stops if v != x0]
    stop_idx = 0

    f = _rhs(system, x, y)
    nodes, states, derivs = [x], [y.copy()], [f.copy()]
    h = _initial_step(system, x, y, f, direction, rel_tol, abs_tol, span)
    err_prev = 1e-4
    n_steps = n_rejected = 0
    reason = Termination.REACHED_END

    while True:
        if n_steps >= max_steps:
            reason = Termination.STEP_LIMIT
            break
        target = stops[stop_idx]
        remaining = abs(target - x)
        landing = h >= remaining
        step = remaining if landing else h
        if step < min_step and not landing:
            reason = Termination.STEP_UNDERFLOW
            break
        x_new = target if landing else x + direction * step
        hs = x_new - x
        y_new, f_new, err = _dp_step(system, x, y, f, hs)
        scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        with np.errstate(invalid="ignore", over="ignore"):
            err_norm = float(np.sqrt(np.mean((err / scale) ** 2)))
        if not math.isfinite(err_norm) or not np.all(np.isfinite(y_new)):
            # stepped outside the region where rhs is finite
            h = step * _MIN_FACTOR
            n_rejected += 1
            continue
        if err_norm > 1.0:
            h = step * max(_MIN_FACTOR, _SAFETY * err_norm ** (-1 / 5))
            n_rejected += 1
            continue
        n_steps += 1
        if not system.guard(x_new, y_new):
            x_last, y_last, f_last = _localise_exit(system, x, y, f, hs, abs_tol)
            if x_last != x:
                nodes.append(x_last)
                states.append(y_last)
                derivs.append(f_last)
            reason = Termination.GUARD_EXIT
            break
        x, y, f = x_new, y_new, f_new
        nodes.append(x)
        states.append(y.copy())
        derivs.append(f.copy())
        if landing:
            stop_idx += 1
            if stop_idx == len(stops):
                break
        if err_norm == 0.0:
            factor = _MAX_FACTOR
        else:
            factor = _SAFETY * err_norm ** (-_K_I) * err_prev**_K_P
            factor = min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
        err_prev = max(err_norm, 1e-4)
        h = step * factor if not landing else max(h, step * factor)

    return Trajectory(np.array(nodes), np.array(states), np.array(derivs), reason,
                      n_steps, n_rejected)


def _localise_exit(system, x, y, f, h, abs_tol):
    lo, hi = 0.0, h
    y_lo, f_lo = y, f
    while abs(hi - lo) > abs_tol:
        mid = 0.5 * (lo + hi)
        y_mid, f_mid, _ = _dp_step(system, x, y, f, mid)
        if np.all(np.isfinite(y_mid)) and system.guard(x + mid, y_mid):
            lo, y_lo = mid, y_mid
            f_lo = _rhs(system, x + mid, y_mid)
        else:
            hi = mid
    return x + lo, y_lo, f_lo


def sample(trajectory: Trajectory, x):
    """State(s) at ``x`` by cubic Hermite interpolation between stored nodes."""
    nodes = trajectory.nodes
    scalar = np.ndim(x) == 0
    xq = np.atleast_1d(np.asarray(x, dtype=float))
    lo, hi = min(nodes[0], nodes[-1]), max(nodes[0], nodes[-1])
    if np.any(xq < lo) or np.any(xq > hi):
        raise OutOfRange(f"sample point outside [{lo}, {hi}]")
    asc = nodes[-1] >= nodes[0]
    xs = nodes if asc else nodes[::-1]
    ys = trajectory.states if asc else trajectory.states[::-1]
    fs = trajectory.derivs if asc else trajectory.derivs[::-1]
    if len(xs) == 1:
        out = np.repeat(ys[:1], len(xq), axis=0)
        return out[0] if scalar else out
    idx = np.clip(np.searchsorted(xs, xq, side="right") - 1, 0, len(xs) - 2)
    x0, x1 = xs[idx], xs[idx + 1]
    h = (x1 - x0)[:, None]
    u = ((xq - x0) / (x1 - x0))[:, None]
    h00 = (1 + 2 * u) * (1 - u) ** 2
    h10 = u * (1 - u) ** 2
    h01 = u**2 * (3 - 2 * u)
    h11 = u**2 * (u - 1)
    out = h00 * ys[idx] + h10 * h * fs[idx] + h01 * ys[idx + 1] + h11 * h * fs[idx + 1]
    # exact node hits return stored states
    exact = xq == x0
    out[exact] = ys[idx[exact]]
    exact1 = xq == x1
    out[exact1] = ys[idx[exact1] + 1]
    return out[0] if scalar else out
