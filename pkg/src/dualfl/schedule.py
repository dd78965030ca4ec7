"""Momentum recursion and inexactness schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class MomentumState:
    t: float = 1.0
    rho: float = 0.0
    n: int = 0

    def __post_init__(self):
        check_rho(self.rho)


def check_rho(rho):
    if not (0.0 <= rho < 1.0) or not math.isfinite(rho):
        raise DomainError(f"rho must lie in [0, 1), got {rho!r}")


def advance(state: MomentumState) -> tuple[MomentumState, float]:
    """One step of the strongly-convex FISTA recursion.

    Returns the next state together with the overrelaxation weight
    ``beta_n`` that pairs ``t_n`` with ``t_{n+1}``.
    """
    t, rho = state.t, state.rho
    a = 1.0 - rho * t * t
    t_next = 0.5 * (a + math.sqrt(a * a + 4.0 * t * t))
    beta = (t - 1.0) / t_next * (1.0 - t_next * rho) / (1.0 - rho)
    return MomentumState(t_next, rho, state.n + 1), beta


def betas(rho, count):
    """First ``count`` overrelaxation weights starting from ``t_0 = 1``."""
    state = MomentumState(rho=rho)
    out = []
    for _ in range(count):
        state, beta = advance(state)
        out.append(beta)
    return out


@dataclass(frozen=True)
class DeltaSchedule:
    """Per-iteration prox tolerance ``delta_n`` of the dual FISTA solver.

    ``polynomial`` uses ``delta_n = b_n / (n+1)^2`` with
    ``b_n = (n+1)^(-2-gamma)``; ``geometric`` uses ``delta_n = a^n``.
    ``zero`` requests exact subproblem solves.
    """

    kind: str = "polynomial"
    gamma: float = 1.0
    a: float | None = None
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("polynomial", "geometric", "zero"):
            raise DomainError(f"unknown delta schedule {self.kind!r}")
        if self.kind == "polynomial" and self.gamma <= 0:
            raise DomainError("polynomial schedule needs gamma > 0")
        if self.kind == "geometric" and (self.a is None or not 0 <= self.a < 1):
            raise DomainError("geometric schedule needs a in [0, 1)")

    @classmethod
    def geometric_for(cls, rho, gamma=0.1):
        return cls("geometric", a=(1.0 - math.sqrt(rho)) / (1.0 + gamma))

    def __call__(self, n):
        if self.kind == "zero":
            return 0.0
        if self.kind == "polynomial":
            return self.scale * (n + 1.0) ** (-4.0 - self.gamma)
        return self.scale * self.a ** n
