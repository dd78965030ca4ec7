"""Choice of the l2 weight for problems that are not strongly convex."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from ..oracle import GlobalObjective, regularize
from .reference import reference_solution


@dataclass
class AlphaChoice:
    alpha: float
    R0: float
    rho: float
    nu: float
    L: float


def choose_alpha(oracles, eps, alpha0=1e-2):
    """Weight ``alpha = eps / (2 R0)`` with ``R0 = ||theta^alpha0||``.

    The DualFL hyperparameters follow as ``nu = alpha`` and
    ``rho = alpha / (L + alpha)``.
    """
    if not eps > 0:
        raise DomainError("target accuracy must be positive")
    L = GlobalObjective(oracles).L
    if L is None:
        raise DomainError("regularization path needs smooth clients")
    ref = reference_solution(regularize(oracles, alpha0))
    R0 = float(np.linalg.norm(ref.theta))
    if R0 == 0:
        raise DomainError("regularized solution is zero; any alpha works")
    alpha = eps / (2.0 * R0)
    return AlphaChoice(alpha, R0, alpha / (L + alpha), alpha, L)
