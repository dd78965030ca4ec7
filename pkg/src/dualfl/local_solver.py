"""Inexact solution of the per-client local problems.

The local objective is ``E(theta) = f(theta) - nu <zeta, theta>``.  Solves
are certified by the primal-dual gap, which vanishes exactly at the local
minimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import apg
from .errors import ConfigurationError, DomainError, LocalSolveIncomplete
from .schedule import DeltaSchedule

GAP_KINDS = ("gap_nonsmooth", "gap_smooth", "gap_fixed", "gap_delta")
KINDS = GAP_KINDS + ("rel_energy", "grad_norm", "exact")

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class LocalProblem:
    oracle: object
    zeta: np.ndarray
    nu: float

    def smooth(self, theta):
        val, grad = self.oracle.smooth_value_grad(theta)
        return val - self.nu * float(self.zeta @ theta), grad - self.nu * self.zeta

    def objective(self, theta):
        return self.smooth(theta)[0] + self.oracle.nonsmooth_value(theta)


@dataclass(frozen=True)
class StopCriterion:
    """How accurately each local problem is solved.

    ``gamma`` parameterizes the two round-dependent gap schedules, ``tol``
    is the fixed threshold of ``gap_fixed``, ``rel_energy`` and
    ``grad_norm``; ``delta`` drives ``gap_delta`` (per-client share
    ``delta_n / N``).
    """

    kind: str = "gap_smooth"
    gamma: float | None = None
    tol: float = 1e-12
    max_iters: int = 100_000
    check_every: int = 10
    delta: DeltaSchedule | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown stop criterion {self.kind!r}")
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be positive")
        if self.kind == "gap_delta" and self.delta is None:
            raise ConfigurationError("gap_delta needs a delta schedule")
        if self.gamma is None:
            object.__setattr__(
                self, "gamma", 1.0 if self.kind == "gap_nonsmooth" else 0.1
            )

    @property
    def uses_gap(self):
        return self.kind in GAP_KINDS

    def target(self, n, N, nu, rho):
        if self.kind == "gap_nonsmooth":
            return gap_threshold("nonsmooth", n, N, nu, rho, self.gamma)
        if self.kind == "gap_smooth":
            return gap_threshold("smooth", n, N, nu, rho, self.gamma)
        if self.kind == "gap_delta":
            return self.delta(n) / N
        return self.tol


@dataclass
class LocalSolveReport:
    theta: np.ndarray
    iters: int
    gap: float
    criterion_met: bool
    energy: float
    flags: tuple = field(default_factory=tuple)


def gap_threshold(regime, n, N, nu, rho, gamma):
    """Per-client gap bound for round ``n``."""
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    if regime == "nonsmooth":
        return 1.0 / (N * nu * (n + 1.0) ** (4.0 + gamma))
    if regime == "smooth":
        if not 0 <= rho < 1:
            raise DomainError("rho must lie in [0, 1)")
        return ((1.0 - math.sqrt(rho)) / (1.0 + gamma)) ** n / N
    raise DomainError(f"unknown regime {regime!r}")


def compute_gap(problem: LocalProblem, theta, x0=None):
    """Primal-dual gap of the local problem at ``theta``.

    With a numeric conjugate the value carries the certified slack of the
    inner solve, so it is an upper estimate of the true gap.
    """
    nu, zeta = problem.nu, problem.zeta
    xi = nu * (zeta - theta)
    conj = problem.oracle.conjugate_g(xi, nu, x0=theta if x0 is None else x0)
    if not np.isfinite(conj.value):
        return math.inf
    r = xi - nu * zeta
    return problem.objective(theta) + conj.value + float(r @ r) / (2.0 * nu)


def solve_local(problem: LocalProblem, warm_start, stop: StopCriterion, *,
                n=0, N=1, rho=0.0, raise_on_cap=True):
    """Approximately minimize the local objective from ``warm_start``.

    Raises :class:`LocalSolveIncomplete` (carrying the partial report) when
    ``stop.max_iters`` is reached first, unless ``raise_on_cap`` is False.
    """
    oracle = problem.oracle
    warm_start = np.asarray(warm_start, dtype=float)
    if not np.all(np.isfinite(warm_start)):
        raise DomainError("warm start is not finite")
    if not 0 < problem.nu <= oracle.mu * (1 + 1e-12):
        raise DomainError(f"nu={problem.nu} must lie in (0, mu={oracle.mu}]")

    if stop.kind == "exact":
        theta = oracle.tilted_argmin(problem.nu * problem.zeta)
        if theta is None:
            raise ConfigurationError("oracle has no exact local solve")
        return LocalSolveReport(theta, 1, 0.0, True, problem.objective(theta))

    target = stop.target(n, N, problem.nu, rho)
    flags = ()
    precision_floor = False
    if stop.uses_gap:
        energy0 = problem.objective(warm_start)
        if target < 1e2 * _EPS * max(abs(energy0), 1e-300):
            precision_floor = True
            flags = ("precision_floor",)
        else:
            gap = compute_gap(problem, warm_start)
            if gap <= target:
                return LocalSolveReport(warm_start, 0, gap, True, energy0)

    x = warm_start
    energy = math.nan
    gap = math.nan
    met = False
    stalls = 0
    it = apg.iterate(problem.smooth, oracle.prox_nonsmooth, oracle.nonsmooth_value,
                     warm_start, step0=1.0 / oracle.smooth_lipschitz)
    for state in it:
        x, energy, k = state.x, state.value, state.k
        if not state.restarted:
            change = abs(state.prev_value - state.value)
            if precision_floor:
                stalls = stalls + 1 if change <= 4 * _EPS * abs(energy) else 0
                if stalls >= 3 or state.subgrad_norm == 0.0:
                    met = True
            elif stop.kind == "rel_energy":
                met = change <= stop.tol * max(abs(energy), 1e-300)
            elif stop.kind == "grad_norm":
                met = state.subgrad_norm <= stop.tol
            elif k % stop.check_every == 0:
                gap = compute_gap(problem, x)
                met = gap <= target
        if met or k >= stop.max_iters:
            break
    if stop.uses_gap and (math.isnan(gap) or not met):
        gap = compute_gap(problem, x)
        met = met or gap <= target
    report = LocalSolveReport(x, k, gap, met, energy, flags)
    if not met and raise_on_cap:
        raise LocalSolveIncomplete(report)
    return report
