"""DualFL: a deterministic simulator for dual-accelerated federated optimization."""

from .engine import EngineConfig, extract_duals, init, run, run_round
from .local_solver import LocalProblem, StopCriterion, gap_threshold, solve_local
from .oracle import GlobalObjective, evaluate, make_family, regularize
from .schedule import DeltaSchedule, MomentumState, advance
from .trace import RunTrace, emit_trace, read_trace

__all__ = [
    "DeltaSchedule", "EngineConfig", "GlobalObjective", "LocalProblem", "MomentumState",
    "RunTrace", "StopCriterion", "advance", "emit_trace", "evaluate", "extract_duals",
    "gap_threshold", "init", "make_family", "read_trace", "regularize", "run",
    "run_round", "solve_local",
]
