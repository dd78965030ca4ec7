"""High-accuracy reference minimizers of the averaged objective."""

from __future__ import annotations

import numpy as np

from .. import apg
from ..engine import Reference
from ..errors import ReferenceSolveError
from ..oracle import GlobalObjective, QuadraticOracle


def newton_reference(objective, tol=1e-10, max_iters=100):
    """Damped Newton with Armijo backtracking on a smooth objective."""
    x = np.zeros(objective.dim)
    val, grad = objective.smooth_value_grad(x)
    for _ in range(max_iters):
        if np.linalg.norm(grad) <= tol:
            return x
        step_dir = -np.linalg.solve(objective.hessian(x), grad)
        slope = float(grad @ step_dir)
        # below value resolution Armijo is noise; judge by the gradient instead
        tiny = -slope < 1e-12 * max(abs(val), 1.0)
        gnorm = np.linalg.norm(grad)
        t = 1.0
        while True:
            cand = x + t * step_dir
            cval, cgrad = objective.smooth_value_grad(cand)
            if tiny:
                if np.linalg.norm(cgrad) < gnorm or t < 1e-12:
                    break
            elif cval <= val + 0.25 * t * slope or t < 1e-12:
                break
            t *= 0.5
        if t < 1e-12 and np.linalg.norm(cgrad) >= np.linalg.norm(grad):
            break
        x, val, grad = cand, cval, cgrad
    if np.linalg.norm(grad) <= tol:
        return x
    raise ReferenceSolveError(
        f"Newton stopped at gradient norm {np.linalg.norm(grad):.3e}")


def apg_reference(objective, tol=1e-10, max_iters=1_000_000, x0=None):
    """Accelerated proximal gradient until the subgradient norm is below tol."""
    x0 = np.zeros(objective.dim) if x0 is None else x0
    state, ok = apg.minimize(
        objective.smooth_value_grad, objective.prox_nonsmooth,
        objective.nonsmooth_value, x0, step0=1.0 / objective.smooth_lipschitz,
        subgrad_tol=tol, max_iters=max_iters,
    )
    if not ok:
        raise ReferenceSolveError(
            f"prox-gradient stopped at subgradient norm {state.subgrad_norm:.3e}")
    return state.x


def reference_solution(oracles, tol=1e-10, hessian_budget=2000):
    """Return ``(theta*, E*)`` packed as a :class:`Reference`."""
    obj = GlobalObjective(oracles)
    if all(isinstance(o, QuadraticOracle) and o.l1 == 0 for o in oracles):
        A = sum(o.A for o in oracles) / obj.N
        b = sum(o.b for o in oracles) / obj.N
        if np.linalg.eigvalsh(A)[0] <= 1e-12 * np.abs(A).max():
            raise ReferenceSolveError("averaged quadratic is singular")
        theta = np.linalg.solve(A, b)
    elif obj.l1 == 0 and obj.dim <= hessian_budget and all(
            hasattr(o, "hessian") for o in oracles):
        theta = newton_reference(obj, tol)
    else:
        theta = apg_reference(obj, tol)
    return Reference(theta, obj.value(theta))
