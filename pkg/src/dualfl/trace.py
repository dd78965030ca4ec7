"""Per-round records and the CSV trace format."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

COLUMNS = (
    "round", "beta", "E_err_rel", "sq_param_err", "grad_norm",
    "zeta_sum_norm", "max_gap", "total_local_iters",
)


@dataclass
class RoundRecord:
    """Metrics of the iterate ``theta^(round)`` produced by one round."""

    round: int
    beta: float
    iters: list
    gaps: list
    theta: np.ndarray
    zeta_sum_norm: float = math.nan
    zeta_max_norm: float = math.nan
    E_err_rel: float = math.nan
    sq_param_err: float = math.nan
    grad_norm: float = math.nan
    unmet: tuple = ()
    flags: tuple = ()

    @property
    def total_local_iters(self):
        return int(sum(self.iters))

    @property
    def max_gap(self):
        finite = [g for g in self.gaps if not math.isnan(g)]
        return max(finite) if finite else math.nan

    def row(self):
        return [getattr(self, c) for c in COLUMNS]


@dataclass
class RunTrace:
    header: dict = field(default_factory=dict)
    records: list = field(default_factory=list)
    converged: bool | None = None

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records], dtype=float)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def render(trace: RunTrace) -> str:
    lines = [f"# {key} = {_fmt(val)}" for key, val in trace.header.items()]
    lines.append(",".join(COLUMNS))
    for rec in trace.records:
        lines.append(",".join(_fmt(v) for v in rec.row()))
    return "\n".join(lines) + "\n"


def emit_trace(trace: RunTrace, path):
    """Write the commented header block and the comma-separated table."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render(trace))


def read_trace(path):
    """Parse a file written by :func:`emit_trace` into (header, rows)."""
    header, rows = {}, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, val = line[1:].partition("=")
                header[key.strip()] = val.strip()
            elif line and not line.startswith("round,"):
                rows.append([float(x) for x in line.split(",")])
    return header, np.array(rows).reshape(-1, len(COLUMNS))
