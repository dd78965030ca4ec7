"""DualFL server/client rounds.

One round: every client solves its local problem (possibly in parallel),
the server averages the local solutions in ascending client order, and
each client updates its control variate with the momentum weight of the
current round.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, LocalSolveIncomplete
from .local_solver import LocalProblem, StopCriterion, solve_local
from .oracle import GlobalObjective
from .schedule import MomentumState, advance, check_rho
from .trace import RoundRecord, RunTrace

log = logging.getLogger(__name__)

# relative shrink applied to nu = mu when gaps must be finite
NU_SHRINK = 1e-6


@dataclass
class EngineConfig:
    nu: float
    rho: float = 0.0
    stop: StopCriterion = field(default_factory=StopCriterion)
    threads: int = 1
    on_unmet: str = "warn"

    def __post_init__(self):
        if self.on_unmet not in ("warn", "abort"):
            raise ConfigurationError("on_unmet must be 'warn' or 'abort'")
        if self.threads < 1:
            raise ConfigurationError("threads must be positive")
        if not self.nu > 0:
            raise ConfigurationError("nu must be positive")
        check_rho(self.rho)


@dataclass
class ServerState:
    theta_cur: np.ndarray
    theta_prev: np.ndarray
    momentum: MomentumState
    round: int = 0
    # beta_n of the last completed round
    beta: float = 0.0


@dataclass
class ClientState:
    zeta_cur: np.ndarray
    zeta_prev: np.ndarray
    theta_local: np.ndarray
    last_report: object = None


@dataclass
class DualExport:
    xi: np.ndarray
    eta: np.ndarray


@dataclass
class Reference:
    theta: np.ndarray
    energy: float


class AbortRun(RuntimeError):
    def __init__(self, record):
        super().__init__(f"round {record.round}: clients {record.unmet} missed the gap target")
        self.record = record


def init(N, dim, rho=0.0):
    if N < 1 or dim < 1:
        raise ConfigurationError("N and dim must be positive")
    z = np.zeros(dim)
    server = ServerState(z.copy(), z.copy(), MomentumState(1.0, rho, 0))
    clients = [ClientState(z.copy(), z.copy(), z.copy()) for _ in range(N)]
    return server, clients


def _solve_all(problems, clients, config, n, executor):
    N = len(problems)

    def task(j):
        try:
            return solve_local(problems[j], clients[j].theta_local, config.stop,
                               n=n, N=N, rho=config.rho)
        except LocalSolveIncomplete as exc:
            return exc.report

    if executor is None:
        return [task(j) for j in range(N)]
    return list(executor.map(task, range(N)))


def run_round(server, clients, oracles, config, executor=None, objective=None,
              reference=None):
    """Execute round ``n = server.round`` and return the new states."""
    N = len(clients)
    if len(oracles) != N:
        raise ConfigurationError("one oracle per client required")
    n = server.round
    nu = config.nu
    problems = [LocalProblem(oracles[j], clients[j].zeta_cur, nu) for j in range(N)]
    reports = _solve_all(problems, clients, config, n, executor)

    total = np.zeros_like(server.theta_cur)
    for rep in reports:
        total += rep.theta
    theta_next = total / N

    momentum, beta = advance(server.momentum)
    new_clients = []
    for c, rep in zip(clients, reports):
        zeta_next = (1.0 + beta) * (c.zeta_cur + theta_next - rep.theta) - beta * (
            c.zeta_prev + server.theta_cur - c.theta_local
        )
        new_clients.append(ClientState(zeta_next, c.zeta_cur, rep.theta, rep))

    zsum = np.zeros_like(theta_next)
    for c in new_clients:
        zsum += c.zeta_cur
    unmet = tuple(j for j, r in enumerate(reports) if not r.criterion_met)
    flags = tuple(sorted({f for r in reports for f in r.flags}))
    record = RoundRecord(
        round=n + 1,
        beta=beta,
        iters=[r.iters for r in reports],
        gaps=[r.gap for r in reports],
        theta=theta_next,
        zeta_sum_norm=float(np.linalg.norm(zsum)),
        zeta_max_norm=max(float(np.linalg.norm(c.zeta_cur)) for c in new_clients),
        unmet=unmet,
        flags=flags + (("unmet",) if unmet else ()),
    )
    if objective is not None:
        fill_errors(record, objective, reference)
    new_server = ServerState(theta_next, server.theta_cur, momentum, n + 1, beta)
    if unmet:
        if config.on_unmet == "abort":
            raise AbortRun(record)
        log.warning("round %d: clients %s missed the gap target", n, unmet)
    return new_server, new_clients, record


def fill_errors(record, objective, reference):
    theta = record.theta
    record.grad_norm = float(np.linalg.norm(objective.min_norm_subgradient(theta)))
    if reference is None:
        return record
    diff = theta - reference.theta
    record.sq_param_err = float(diff @ diff)
    err = objective.value(theta) - reference.energy
    record.E_err_rel = err / abs(reference.energy) if reference.energy != 0 else err
    return record


def extract_duals(server, clients, nu):
    """Dual iterates ``(xi^(n), eta^(n))`` implied by the current states."""
    N, dim = len(clients), server.theta_cur.size
    if server.round == 0:
        return DualExport(np.zeros((N, dim)), np.zeros((N, dim)))
    beta = server.beta
    xi = np.array([nu * (c.zeta_prev - c.theta_local) for c in clients])
    eta = np.array([
        nu * (c.zeta_cur - (1.0 + beta) * server.theta_cur + beta * server.theta_prev)
        for c in clients
    ])
    return DualExport(xi, eta)


def resolve_nu(oracles, nu, stop):
    """Effective ``nu`` and a note when it had to be shrunk below ``mu``.

    Gap certificates need a finite conjugate of ``g = f - (nu/2)||.||^2``,
    which fails when ``nu`` equals the curvature of some client.
    """
    mu = min(o.mu for o in oracles)
    if nu == "mu":
        nu = mu
    nu = float(nu)
    # values above mu are left for validate() to reject
    if stop.uses_gap and mu * (1.0 - NU_SHRINK) < nu <= mu * (1 + 1e-12):
        new = mu * (1.0 - NU_SHRINK)
        return new, f"nu {nu!r} -> {new!r} (gap certificates need nu < mu)"
    return nu, None


def validate(oracles, config):
    mu = min(o.mu for o in oracles)
    if not 0 < config.nu <= mu * (1 + 1e-12):
        raise ConfigurationError(f"nu={config.nu} must lie in (0, mu={mu}]")
    Ls = [o.L for o in oracles]
    notes = []
    if all(v is not None for v in Ls):
        L = max(Ls)
        limit = min(1 - 1e-12, config.nu / L)
        # slack absorbs the nu shrink of resolve_nu
        if config.rho > limit * (1 + 10 * NU_SHRINK):
            if any(getattr(o, "L_is_bound", False) for o in oracles):
                notes.append(f"rho {config.rho} exceeds nu/L_bound={limit:.6g}")
            else:
                raise ConfigurationError(
                    f"rho={config.rho} exceeds nu/L={limit:.6g}"
                )
    dims = {o.dim for o in oracles}
    if len(dims) != 1:
        raise ConfigurationError("clients disagree on the parameter dimension")
    return notes


def problem_constants(oracles):
    obj = GlobalObjective(oracles)
    kappa = obj.L / obj.mu if obj.L is not None and obj.mu > 0 else math.nan
    return {"mu": obj.mu, "L": obj.L if obj.L is not None else math.nan,
            "kappa": kappa, "N": obj.N, "dim": obj.dim}


def run(oracles, config: EngineConfig, rounds, reference=None, target=None,
        on_round=None, header=None, metrics=None):
    """Run ``rounds`` DualFL rounds and collect a :class:`RunTrace`.

    ``target`` is an optional ``(column, value)`` pair; the run stops once
    the column drops to the value and ``trace.converged`` tells whether it
    did.  ``on_round(server, clients, record)`` is invoked after each round.
    ``metrics`` overrides the objective used for the error columns.
    """
    notes = validate(oracles, config)
    objective = metrics if metrics is not None else GlobalObjective(oracles)
    hdr = dict(header or {})
    hdr.update(problem_constants(oracles))
    hdr.update(nu=config.nu, rho=config.rho, stop=config.stop.kind)
    for i, note in enumerate(notes):
        hdr[f"note{i}"] = note
    if reference is not None:
        hdr["E_star"] = reference.energy
        hdr["E_err_mode"] = "relative" if reference.energy != 0 else "absolute"
    trace = RunTrace(hdr)
    server, clients = init(len(oracles), oracles[0].dim, config.rho)
    executor = ThreadPoolExecutor(config.threads) if config.threads > 1 else None
    try:
        for _ in range(rounds):
            try:
                server, clients, rec = run_round(
                    server, clients, oracles, config, executor, objective, reference)
            except AbortRun as exc:
                trace.records.append(exc.record)
                trace.converged = False
                trace.header["aborted_round"] = exc.record.round
                return trace
            trace.records.append(rec)
            if on_round is not None:
                on_round(server, clients, rec)
            if target is not None and getattr(rec, target[0]) <= target[1]:
                trace.converged = True
                break
    finally:
        if executor is not None:
            executor.shutdown()
    if target is not None and trace.converged is None:
        trace.converged = False
    return trace
