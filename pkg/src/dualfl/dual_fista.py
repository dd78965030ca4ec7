"""Inexact FISTA on the dual of the federated problem.

The dual variable stacks one vector per client, ``xi`` of shape ``(N, d)``.
Its energy is ``sum_j g_j*(xi_j) + ||sum_j xi_j||^2 / (2 N nu)``.  The prox
step splits into independent per-client subproblems, each evaluated through
a primal solve by Moreau decomposition.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError, LocalSolveIncomplete
from .local_solver import LocalProblem, StopCriterion, solve_local
from .schedule import DeltaSchedule, MomentumState, advance


@dataclass
class SubproblemResult:
    xi: np.ndarray
    theta: np.ndarray
    gap: float
    iters: int
    met: bool = True


@dataclass
class FistaTrace:
    xi: list = field(default_factory=list)
    eta: list = field(default_factory=list)
    primal: list = field(default_factory=list)
    # summed per-client subproblem gaps, one per iteration
    certificates: list = field(default_factory=list)
    deltas: list = field(default_factory=list)
    flagged: list = field(default_factory=list)
    # per-client inner iteration counts, one list per iteration
    iters: list = field(default_factory=list)


def recover_primal(xi, nu):
    xi = np.asarray(xi, dtype=float)
    return -xi.sum(axis=0) / (xi.shape[0] * nu)


def dual_energy(xi, oracles, nu):
    """Dual objective; ``inf`` where some conjugate is an indicator."""
    xi = np.asarray(xi, dtype=float)
    total = 0.0
    for o, x in zip(oracles, xi):
        total += o.conjugate_g(x, nu).value
    s = xi.sum(axis=0)
    return total + float(s @ s) / (2.0 * len(oracles) * nu)


def _center(eta):
    return eta - eta.sum(axis=0) / eta.shape[0]


def subproblem_objective(xi_j, c_j, oracle, nu):
    """``g*(xi_j) + ||xi_j - c_j||^2 / (2 nu)`` with ``c = eta_j - mean(eta)``."""
    d = xi_j - c_j
    return oracle.conjugate_g(xi_j, nu).value + float(d @ d) / (2.0 * nu)


def prox_objective(xi, eta, oracles, nu):
    """Linearized dual energy minimized by one FISTA prox step."""
    xi, eta = np.asarray(xi, float), np.asarray(eta, float)
    N = len(oracles)
    grad = np.broadcast_to(eta.sum(axis=0) / (N * nu), eta.shape)
    d = xi - eta
    val = float(np.sum(grad * d)) + float(np.sum(d * d)) / (2.0 * nu)
    return val + sum(o.conjugate_g(x, nu).value for o, x in zip(oracles, xi))


def prox_subproblem(j, eta, oracles, nu, tol, warm_start=None, max_iters=100_000):
    """Solve client ``j``'s share of the dual prox step to accuracy ``tol``.

    ``tol = 0`` requests an exact solve (quadratic families only).
    """
    if tol < 0:
        raise DomainError("tolerance must be nonnegative")
    eta = np.asarray(eta, dtype=float)
    oracle = oracles[j]
    c = _center(eta)[j]
    if tol == 0:
        theta = oracle.tilted_argmin(c)
        if theta is None:
            raise ConfigurationError("exact dual prox needs a quadratic family")
        return SubproblemResult(c - nu * theta, theta, 0.0, 1)
    problem = LocalProblem(oracle, c / nu, nu)
    warm = np.zeros(oracle.dim) if warm_start is None else warm_start
    try:
        rep = solve_local(problem, warm, StopCriterion("gap_fixed", tol=tol,
                                                       max_iters=max_iters))
    except LocalSolveIncomplete as exc:
        rep = exc.report
    return SubproblemResult(c - nu * rep.theta, rep.theta, rep.gap, rep.iters,
                            rep.criterion_met)


def fista_run(oracles, nu, rho, delta: DeltaSchedule, rounds, threads=1,
              on_iter=None):
    """Run ``rounds`` iterations from ``xi = eta = 0``.

    Iterate ``n`` solves the prox step with total accuracy ``delta(n)``,
    split evenly over the clients, then overrelaxes with ``beta_n``.
    """
    N, dim = len(oracles), oracles[0].dim
    if not 0 < nu <= min(o.mu for o in oracles) * (1 + 1e-12):
        raise DomainError("nu must lie in (0, mu]")
    if delta.kind == "geometric" and not delta.a < 1 - math.sqrt(rho):
        raise DomainError("geometric schedule needs a < 1 - sqrt(rho)")
    xi = np.zeros((N, dim))
    eta = np.zeros((N, dim))
    warm = [np.zeros(dim) for _ in range(N)]
    momentum = MomentumState(1.0, rho, 0)
    out = FistaTrace([xi], [eta], [recover_primal(xi, nu)])
    executor = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        for n in range(rounds):
            tol = delta(n) / N

            def task(j, eta=eta, tol=tol):
                return prox_subproblem(j, eta, oracles, nu, tol, warm[j])

            if executor is None:
                results = [task(j) for j in range(N)]
            else:
                results = list(executor.map(task, range(N)))
            xi_next = np.array([r.xi for r in results])
            warm = [r.theta for r in results]
            momentum, beta = advance(momentum)
            eta = (1.0 + beta) * xi_next - beta * xi
            xi = xi_next
            out.xi.append(xi)
            out.eta.append(eta)
            out.primal.append(recover_primal(xi, nu))
            out.certificates.append(sum(r.gap for r in results))
            out.deltas.append(delta(n))
            out.flagged.append(tuple(j for j, r in enumerate(results) if not r.met))
            out.iters.append([r.iters for r in results])
            if on_iter is not None:
                on_iter(n, out)
    finally:
        if executor is not None:
            executor.shutdown()
    return out
