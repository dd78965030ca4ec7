"""Optional MNIST run.

Expects ``data/mnist_train.csv`` (or a path given with ``--data``) with 784
pixel columns scaled to [0, 1] and the 0-based digit in the last column.
Prints the relative energy error every ten rounds and its log-slope.
"""

import argparse
import pathlib
import sys

import numpy as np

from dualfl.harness import experiments
from dualfl.harness.config import load_config
from dualfl.trace import emit_trace

HERE = pathlib.Path(__file__).resolve().parent


def main():
    parser = argparse.ArgumentParser(description="DualFL on MNIST")
    parser.add_argument("--data", type=pathlib.Path, default=HERE.parent / "data" / "mnist_train.csv")
    parser.add_argument("--out", type=pathlib.Path, default=pathlib.Path("results/mnist.csv"))
    args = parser.parse_args()
    if not args.data.exists():
        print(f"{args.data} not found; nothing to do", file=sys.stderr)
        return 2
    cfg = load_config(HERE / "configs" / "mnist.cfg")
    cfg.problem.data = str(args.data)
    trace = experiments.run_dualfl(cfg)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    emit_trace(trace, args.out)
    err = trace.column("E_err_rel")
    for n in range(0, err.size, 10):
        print(f"round {n + 1:>4}  E_err_rel {err[n]:.3e}")
    slope = np.polyfit(np.arange(err.size), np.log(np.maximum(err, 1e-300)), 1)[0]
    print(f"log slope {slope:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
