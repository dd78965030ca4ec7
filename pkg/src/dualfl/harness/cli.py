"""Command line entry point.

Exit status is 0 on success, 1 when a convergence target or tolerance was
not met and 2 on configuration, data or I/O problems.
"""

from __future__ import annotations

import argparse
import logging
import os
import re
import sys

from ..errors import ConfigurationError, DualFLError
from ..trace import emit_trace, render
from . import experiments
from .config import RunConfig, load_config

EXIT_OK, EXIT_TARGET, EXIT_ERROR = 0, 1, 2

COMMANDS = {
    "run": None,
    "verify-duality": "verify_duality",
    "sweep-rho": "sweep_rho",
    "regularized-run": "regularized",
    "baseline": "baseline",
}


def build_parser():
    parser = argparse.ArgumentParser(prog="dualfl", description="DualFL federated optimization simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH", help="flat key = value config file")
        p.add_argument("--out", metavar="PATH", help="trace file (stdout when omitted)")
        p.add_argument("--seed", type=_u64, help="overrides run.seed")
        p.add_argument("--rounds", type=_nonneg, help="overrides run.rounds")
        p.add_argument("--threads", type=_positive, help="overrides run.threads")
    return parser


def _u64(text):
    val = int(text)
    if not 0 <= val < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return val


def _nonneg(text):
    val = int(text)
    if val < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return val


def _positive(text):
    val = int(text)
    if val < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return val


def _configure(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    for key, val in (("run.seed", args.seed), ("run.rounds", args.rounds),
                     ("run.threads", args.threads)):
        if val is not None:
            cfg.set(key, val)
    mode = COMMANDS[args.command]
    if mode is not None:
        cfg.run.mode = mode
    return cfg


def _sweep_path(out, key):
    root, ext = os.path.splitext(out)
    tag = re.sub(r"[^A-Za-z0-9.+-]", "_", key)
    return f"{root}_rho-{tag}{ext or '.csv'}"


def _write(trace, path):
    if path is None:
        sys.stdout.write(render(trace))
    else:
        emit_trace(trace, path)


def execute(cfg, out=None):
    """Run the configured mode, write its traces and return the exit code."""
    mode = cfg.run.mode
    if mode == "dualfl":
        trace = experiments.run_dualfl(cfg)
    elif mode == "dual_fista":
        trace = experiments.run_dual_fista(cfg)
    elif mode == "regularized":
        trace = experiments.regularized_run(cfg)
    elif mode == "baseline":
        trace = experiments.baseline(cfg)
    elif mode == "verify_duality":
        res = experiments.verify_duality(cfg)
        _write(res.traces["trace"], out)
        dev = res.summary["max_dual_deviation"]
        print(f"max_dual_deviation = {dev:.6g}", file=sys.stderr)
        return EXIT_OK if res.ok else EXIT_TARGET
    elif mode == "sweep_rho":
        res = experiments.sweep_rho(cfg)
        for key, trace in res.traces.items():
            _write(trace, None if out is None else _sweep_path(out, key))
        return EXIT_OK if res.ok else EXIT_TARGET
    else:
        raise ConfigurationError(f"unknown run.mode {mode!r}")
    _write(trace, out)
    return EXIT_TARGET if trace.converged is False else EXIT_OK


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; keep --help at 0
        return int(exc.code or 0)
    try:
        return execute(_configure(args), args.out)
    except (DualFLError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
