"""Drivers behind each CLI subcommand."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import dual_fista, engine
from ..errors import ConfigurationError, ReferenceSolveError
from ..local_solver import StopCriterion
from ..oracle import GlobalObjective, regularize
from ..schedule import DeltaSchedule, betas
from ..trace import RoundRecord, RunTrace
from .baselines import run_baseline
from .problems import build_problem
from .reference import reference_solution
from .regularization import choose_alpha


@dataclass
class Outcome:
    """Traces produced by one command and whether its target was met."""

    traces: dict = field(default_factory=dict)
    ok: bool = True
    summary: dict = field(default_factory=dict)


def _header(cfg, **extra):
    hdr = {f"config.{k}": v for k, v in cfg.flat().items()}
    hdr.update(extra)
    return hdr


def _reference(oracles, header):
    try:
        return reference_solution(oracles)
    except ReferenceSolveError as exc:
        header["reference"] = f"unavailable ({exc})"
        return None


def make_stop(lc):
    gamma = lc.gamma if lc.gamma > 0 else None
    return StopCriterion(lc.criterion, gamma=gamma, tol=lc.tol, max_iters=lc.max_iters)


def resolve_rho(text, nu, oracles):
    text = str(text).strip()
    L = GlobalObjective(oracles).L
    if text in ("inverse_kappa", "nu_over_L"):
        if L is None:
            raise ConfigurationError(f"rho={text} needs smooth clients")
        return nu / L
    try:
        return float(text)
    except ValueError:
        raise ConfigurationError(f"cannot parse rho {text!r}") from None


def engine_config(cfg, oracles, nu=None):
    stop = make_stop(cfg.local)
    nu_req = cfg.dualfl.nu if nu is None else nu
    if nu_req != "mu":
        try:
            nu_req = float(nu_req)
        except ValueError:
            raise ConfigurationError(f"cannot parse nu {nu_req!r}") from None
    nu_eff, note = engine.resolve_nu(oracles, nu_req, stop)
    rho = resolve_rho(cfg.dualfl.rho, nu_eff, oracles)
    conf = engine.EngineConfig(nu_eff, rho, stop, cfg.run.threads, cfg.dualfl.on_unmet)
    return conf, note


def _target(cfg):
    if cfg.run.target > 0:
        return (cfg.run.target_metric, cfg.run.target)
    return None


def run_dualfl(cfg, oracles=None, reference=None, rho=None, metrics=None, extra=None):
    oracles = oracles or build_problem(cfg.problem, cfg.run.seed)
    conf, note = engine_config(cfg, oracles)
    if rho is not None:
        conf.rho = rho
    header = _header(cfg, mode="dualfl", **(extra or {}))
    if note:
        header["substitution"] = note
    if reference is None:
        reference = _reference(oracles, header)
    trace = engine.run(oracles, conf, cfg.run.rounds, reference, _target(cfg),
                       header=header, metrics=metrics)
    return trace


def delta_schedule(cfg, rho):
    fc = cfg.fista
    if fc.delta == "polynomial":
        return DeltaSchedule("polynomial", gamma=fc.gamma or 1.0)
    if fc.delta == "geometric":
        return DeltaSchedule.geometric_for(rho, fc.gamma or 0.1)
    if fc.delta == "zero":
        return DeltaSchedule("zero")
    raise ConfigurationError(f"unknown delta schedule {fc.delta!r}")


def run_dual_fista(cfg, oracles=None):
    oracles = oracles or build_problem(cfg.problem, cfg.run.seed)
    stop = StopCriterion("exact") if cfg.fista.delta == "zero" else StopCriterion("gap_fixed")
    nu, note = engine.resolve_nu(oracles, _nu_value(cfg), stop)
    rho = resolve_rho(cfg.dualfl.rho, nu, oracles)
    delta = delta_schedule(cfg, rho)
    header = _header(cfg, mode="dual_fista", nu=nu, rho=rho)
    header.update(engine.problem_constants(oracles))
    if note:
        header["substitution"] = note
    reference = _reference(oracles, header)
    ft = dual_fista.fista_run(oracles, nu, rho, delta, cfg.run.rounds, cfg.run.threads)
    obj = GlobalObjective(oracles)
    trace = RunTrace(header)
    beta = betas(rho, cfg.run.rounds)
    for n in range(cfg.run.rounds):
        rec = RoundRecord(n + 1, beta[n], list(ft.iters[n]), [ft.certificates[n]],
                          ft.primal[n + 1])
        trace.records.append(engine.fill_errors(rec, obj, reference))
    return trace



def _nu_value(cfg):
    return cfg.dualfl.nu if cfg.dualfl.nu == "mu" else float(cfg.dualfl.nu)


def verify_duality(cfg, oracles=None):
    """Run both engines on one problem; report the largest dual deviation."""
    oracles = oracles or build_problem(cfg.problem, cfg.run.seed)
    if cfg.verify.exact:
        stop = StopCriterion("exact")
        delta = DeltaSchedule("zero")
    else:
        probe = StopCriterion("gap_fixed")
        nu_tmp, _ = engine.resolve_nu(oracles, _nu_value(cfg), probe)
        delta = delta_schedule(cfg, resolve_rho(cfg.dualfl.rho, nu_tmp, oracles))
        stop = StopCriterion("gap_delta", delta=delta, max_iters=cfg.local.max_iters)
    nu, note = engine.resolve_nu(oracles, _nu_value(cfg), stop)
    rho = resolve_rho(cfg.dualfl.rho, nu, oracles)
    conf = engine.EngineConfig(nu, rho, stop, cfg.run.threads, cfg.dualfl.on_unmet)
    exported = []

    def grab(server, clients, rec):
        exported.append(engine.extract_duals(server, clients, nu).xi)

    header = _header(cfg, mode="verify_duality")
    if note:
        header["substitution"] = note
    trace = engine.run(oracles, conf, cfg.run.rounds, on_round=grab, header=header)
    ft = dual_fista.fista_run(oracles, nu, rho, delta, cfg.run.rounds, cfg.run.threads)
    dev = max((float(np.max(np.linalg.norm(a - b, axis=1)))
               for a, b in zip(exported, ft.xi[1:])), default=0.0)
    trace.header["max_dual_deviation"] = dev
    ok = dev <= cfg.verify.tolerance
    return Outcome({"trace": trace}, ok, {"max_dual_deviation": dev})


def sweep_rho(cfg, oracles=None):
    oracles = oracles or build_problem(cfg.problem, cfg.run.seed)
    probe, _ = engine_config(cfg, oracles)
    reference = reference_solution(oracles)
    out = Outcome()
    for text in cfg.sweep.rhos.split(","):
        rho = resolve_rho(text, probe.nu, oracles)
        trace = run_dualfl(cfg, oracles, reference, rho=rho, extra={"sweep_rho": rho})
        key = text.strip()
        out.traces[key] = trace
        if trace.converged is False:
            out.ok = False
        out.summary[key] = len(trace.records)
    return out


def regularized_run(cfg, oracles=None):
    """DualFL on the l2-regularized problem with ``nu = alpha``."""
    oracles = oracles or build_problem(cfg.problem, cfg.run.seed)
    rc = cfg.regularized
    L = GlobalObjective(oracles).L
    if L is None:
        raise ConfigurationError("regularized runs need smooth clients")
    if rc.alpha > 0:
        alpha, R0 = rc.alpha, math.nan
    elif rc.epsilon > 0:
        choice = choose_alpha(oracles, rc.epsilon, rc.alpha0)
        alpha, R0 = choice.alpha, choice.R0
    else:
        raise ConfigurationError("set regularized.alpha or regularized.epsilon")
    reg = regularize(oracles, alpha)
    stop = make_stop(cfg.local)
    nu, note = engine.resolve_nu(reg, alpha, stop)
    conf = engine.EngineConfig(nu, alpha / (L + alpha), stop, cfg.run.threads,
                               cfg.dualfl.on_unmet)
    header = _header(cfg, mode="regularized", alpha=alpha, R0=R0,
                     reference="regularized minimizer; errors measured on E")
    if note:
        header["substitution"] = note
    metrics = GlobalObjective(oracles)
    reference = None
    try:
        ref = reference_solution(reg)
        reference = engine.Reference(ref.theta, metrics.value(ref.theta))
    except ReferenceSolveError as exc:
        header["reference"] = f"unavailable ({exc})"
    return engine.run(reg, conf, cfg.run.rounds, reference, _target(cfg),
                      header=header, metrics=metrics)


def baseline(cfg, oracles=None):
    oracles = oracles or build_problem(cfg.problem, cfg.run.seed)
    bc = cfg.baseline
    header = _header(cfg, mode=f"baseline_{bc.kind}")
    reference = _reference(oracles, header)
    trace = run_baseline(oracles, bc.kind, cfg.run.rounds, bc.local_steps,
                         bc.step or None, reference, header)
    tgt = _target(cfg)
    if tgt is not None:
        trace.converged = any(getattr(r, tgt[0]) <= tgt[1] for r in trace.records)
    return trace
