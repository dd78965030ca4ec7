"""Run the desk-scale experiments and print a one-line summary for each.

Traces land in ``--out`` (default ``results/``) and can be plotted with any
CSV tool; lines starting with '#' hold the run configuration.
"""

import argparse
import math
import pathlib
import time

import numpy as np

from dualfl.harness import experiments
from dualfl.harness.config import load_config
from dualfl.harness.rates import rate_fit
from dualfl.trace import emit_trace

HERE = pathlib.Path(__file__).resolve().parent
CONFIGS = HERE / "configs"


def linear_rate(out):
    trace = experiments.run_dualfl(load_config(CONFIGS / "linear_rate.cfg"))
    emit_trace(trace, out / "linear_rate.csv")
    factor, _ = rate_fit(trace.column("sq_param_err"), window=(20, 80))
    iters = trace.column("total_local_iters")[9:]
    return f"factor {factor:.4f} (1 - sqrt(rho) = 0.9); M_n median {np.median(iters):.0f}"


def elastic_net(out):
    trace = experiments.run_dualfl(load_config(CONFIGS / "elastic_net.cfg"))
    emit_trace(trace, out / "elastic_net.csv")
    _, sup = rate_fit(trace.column("sq_param_err"), window=(10, 200))
    return f"sup n^2 err relative to round 10: {sup:.3f}"


def rho_sweep(out):
    res = experiments.sweep_rho(load_config(CONFIGS / "sweep.cfg"))
    parts = []
    for key, trace in res.traces.items():
        emit_trace(trace, out / f"sweep_rho-{key}.csv")
        parts.append(f"{key}: {len(trace.records)}")
    return "rounds to 1e-10 by rho -> " + ", ".join(parts)


def client_count(out):
    cfg = load_config(CONFIGS / "logistic.cfg")
    cfg.run.rounds = 300
    parts = []
    for N in (2, 8, 32):
        cfg.problem.clients = N
        trace = experiments.run_dualfl(cfg)
        emit_trace(trace, out / f"logistic_N{N}.csv")
        parts.append(f"N={N}: {len(trace.records)}")
    return "rounds to 1e-6 -> " + ", ".join(parts)


def regularization(out):
    cfg = load_config(CONFIGS / "regularized.cfg")
    cfg.regularized.epsilon = 0.0
    levels = []
    for alpha in (1e-2, 1e-3):
        cfg.regularized.alpha = alpha
        trace = experiments.regularized_run(cfg)
        emit_trace(trace, out / f"regularized_alpha{alpha:g}.csv")
        levels.append(float(np.median(trace.column("grad_norm")[-50:])))
    return f"grad plateaus {levels[0]:.3e} / {levels[1]:.3e} = {levels[0] / levels[1]:.2f}"


def drift(out):
    cfg = load_config(CONFIGS / "fedavg.cfg")
    base = experiments.baseline(cfg)
    emit_trace(base, out / "fedavg.csv")
    cfg.dualfl.rho = "nu_over_L"
    dual = experiments.run_dualfl(cfg)
    emit_trace(dual, out / "fedavg_vs_dualfl.csv")
    return (f"final sq error fedavg {base.records[-1].sq_param_err:.3e}, "
            f"dualfl {dual.records[-1].sq_param_err:.3e}")


def duality(out):
    res = experiments.verify_duality(load_config(CONFIGS / "verify.cfg"))
    emit_trace(res.traces["trace"], out / "verify.csv")
    return f"max dual deviation {res.summary['max_dual_deviation']:.3e}"


EXPERIMENTS = {
    "duality": duality, "linear": linear_rate, "elastic": elastic_net, "sweep": rho_sweep,
    "clients": client_count, "regularization": regularization, "drift": drift,
}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results", type=pathlib.Path)
    parser.add_argument("names", nargs="*", choices=[[]] + list(EXPERIMENTS),
                        help="subset to run (default: all)")
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name in args.names or EXPERIMENTS:
        start = time.perf_counter()
        summary = EXPERIMENTS[name](args.out)
        print(f"{name:<15} {summary}  [{time.perf_counter() - start:.1f}s]")


if __name__ == "__main__":
    main()
