"""Accelerated proximal gradient with backtracking and adaptive restart.

Every composite solve in the package (local problems, numeric conjugates,
reference solutions) runs through :func:`iterate`.  The generator yields
after each iteration so callers apply their own stopping rules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_MIN_STEP = 1e-300
_VALUE_RESOLUTION = 1e-10


@dataclass
class ApgState:
    k: int
    x: np.ndarray
    value: float
    prev_value: float
    # norm of an element of the subdifferential of F at x
    subgrad_norm: float
    step: float
    restarted: bool


def iterate(smooth, prox, nonsmooth, x0, step0=1.0, restart=True):
    """Minimize ``F = smooth + nonsmooth`` starting at ``x0``.

    Parameters
    ----------
    smooth : callable
        ``smooth(x) -> (value, gradient)``.
    prox : callable
        ``prox(z, step)`` returns the proximal point of ``step * nonsmooth``.
    nonsmooth : callable
        ``nonsmooth(x) -> value``.
    x0 : ndarray
        Starting point.
    step0 : float
        First trial step.  Later trials start from twice the last accepted
        step and halve until the composite descent inequality holds.
    restart : bool
        Reset momentum whenever the objective would increase.

    Yields
    ------
    ApgState
        The accepted iterate after each iteration.  On a restart the iterate
        is unchanged and ``restarted`` is set.
    """
    x = np.array(x0, dtype=float)
    fx, gx = smooth(x)
    Fx = fx + nonsmooth(x)
    y, fy, gy = x, fx, gx
    y_is_x = True
    t = 1.0
    step = float(step0)
    subgrad = math.inf
    k = 0
    while True:
        k += 1
        if k > 1:
            step *= 2.0
        while True:
            z = prox(y - step * gy, step)
            d = z - y
            fz, gz = smooth(z)
            dd = float(d @ d)
            if dd == 0.0:
                break
            if abs(fz - fy) >= _VALUE_RESOLUTION * max(abs(fz), abs(fy)):
                if fz <= fy + float(gy @ d) + dd / (2.0 * step):
                    break
            # values too close to resolve the quadratic term: test curvature
            elif float((gz - gy) @ d) <= dd / step:
                break
            step *= 0.5
            if step < _MIN_STEP:
                raise FloatingPointError("backtracking step underflow")
        Fz = fz + nonsmooth(z)
        if restart and not y_is_x and Fz > Fx:
            t = 1.0
            y, fy, gy = x, fx, gx
            y_is_x = True
            yield ApgState(k, x, Fx, Fx, subgrad, step, True)
            continue
        subgrad = float(np.linalg.norm((y - z) / step + gz - gy))
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        coef = (t - 1.0) / t_next
        prev = Fx
        if coef == 0.0:
            y, fy, gy = z, fz, gz
            y_is_x = True
        else:
            y = z + coef * (z - x)
            fy, gy = smooth(y)
            y_is_x = False
        x, fx, gx, Fx = z, fz, gz, Fz
        t = t_next
        yield ApgState(k, x, Fx, prev, subgrad, step, False)


def minimize(smooth, prox, nonsmooth, x0, step0=1.0, *, subgrad_tol=0.0,
             rel_tol=0.0, max_iters=10_000):
    """Run :func:`iterate` until a subgradient or relative-change test passes.

    Returns the last state and a flag telling whether a test was met.
    """
    state = None
    for state in iterate(smooth, prox, nonsmooth, x0, step0):
        if not state.restarted:
            if state.subgrad_norm <= subgrad_tol:
                return state, True
            if rel_tol > 0 and abs(state.prev_value - state.value) <= rel_tol * max(
                abs(state.value), 1e-300
            ):
                return state, True
        if state.k >= max_iters:
            return state, False
    return state, False  # pragma: no cover
