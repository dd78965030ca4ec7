"""Two reference federated baselines sharing the DualFL trace schema.

``gd`` is full (proximal) gradient descent on the averaged objective, one
step per round.  ``fedavg`` runs ``K`` local (proximal) gradient steps per
client from the server point and averages, with no drift correction.
"""

from __future__ import annotations

import math

import numpy as np

from ..engine import fill_errors, problem_constants
from ..errors import ConfigurationError
from ..oracle import GlobalObjective
from ..trace import RoundRecord, RunTrace


def _gd_step(obj, x, fx, gx, step, backtrack):
    if not backtrack:
        return obj.prox_nonsmooth(x - step * gx, step), step
    step *= 2.0
    while True:
        z = obj.prox_nonsmooth(x - step * gx, step)
        d = z - x
        fz = obj.smooth_value_grad(z)[0]
        if fz <= fx + float(gx @ d) + float(d @ d) / (2.0 * step) or step < 1e-300:
            return z, step
        step *= 0.5


def run_gd(oracles, rounds, step=None, reference=None, header=None):
    obj = GlobalObjective(oracles)
    trace = RunTrace({**(header or {}), **problem_constants(oracles),
                      "baseline": "gd", "step": step or "backtracking"})
    backtrack = step is None
    cur = 1.0 / obj.smooth_lipschitz if backtrack else step
    x = np.zeros(obj.dim)
    for n in range(rounds):
        fx, gx = obj.smooth_value_grad(x)
        x, cur = _gd_step(obj, x, fx, gx, cur, backtrack)
        rec = RoundRecord(n + 1, math.nan, [1], [math.nan], x)
        trace.records.append(fill_errors(rec, obj, reference))
    return trace


def run_fedavg(oracles, rounds, local_steps, step=None, reference=None, header=None):
    obj = GlobalObjective(oracles)
    if step is None:
        step = 1.0 / max(o.smooth_lipschitz for o in oracles)
    trace = RunTrace({**(header or {}), **problem_constants(oracles),
                      "baseline": "fedavg", "local_steps": local_steps, "step": step})
    x = np.zeros(obj.dim)
    N = len(oracles)
    for n in range(rounds):
        total = np.zeros(obj.dim)
        for o in oracles:
            z = x
            for _ in range(local_steps):
                z = o.prox_nonsmooth(z - step * o.smooth_value_grad(z)[1], step)
            total += z
        x = total / N
        rec = RoundRecord(n + 1, math.nan, [local_steps] * N, [math.nan] * N, x)
        trace.records.append(fill_errors(rec, obj, reference))
    return trace


def run_baseline(oracles, kind, rounds, local_steps=1, step=None, reference=None,
                 header=None):
    if kind == "gd":
        return run_gd(oracles, rounds, step, reference, header)
    if kind == "fedavg":
        return run_fedavg(oracles, rounds, local_steps, step, reference, header)
    raise ConfigurationError(f"unknown baseline {kind!r}")
