"""Run configuration: flat ``section.key = value`` text files.

Lines starting with ``#`` and blank lines are ignored.  Values are coerced
to the type of the target field; unknown keys are errors.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from ..errors import ConfigurationError


@dataclass
class ProblemConfig:
    kind: str = "quadratic"
    clients: int = 4
    dim: int = 10
    kappa: float = 100.0
    samples: int = 40
    features: int = 4
    classes: int = 3
    mu: float = 0.01
    l1: float = 0.1
    separation: float = 1.5
    data: str = ""
    format: str = "dense_csv"
    zero_based_labels: bool = False
    partition: str = "contiguous"


@dataclass
class DualFLConfig:
    # "mu" or a number
    nu: str = "mu"
    # a number, "inverse_kappa" or "nu_over_L"
    rho: str = "0"
    on_unmet: str = "warn"


@dataclass
class LocalConfig:
    criterion: str = "gap_smooth"
    gamma: float = 0.0
    tol: float = 1e-12
    max_iters: int = 100_000


@dataclass
class RunParams:
    mode: str = "dualfl"
    rounds: int = 100
    seed: int = 0
    threads: int = 1
    target_metric: str = "sq_param_err"
    target: float = 0.0


@dataclass
class BaselineConfig:
    kind: str = "gd"
    local_steps: int = 10
    # 0 selects 1/L (fedavg) or backtracking (gd)
    step: float = 0.0


@dataclass
class FistaConfig:
    delta: str = "polynomial"
    gamma: float = 0.0


@dataclass
class VerifyConfig:
    tolerance: float = 1e-8
    exact: bool = True


@dataclass
class SweepConfig:
    rhos: str = "0, 0.001, 0.01, nu_over_L"


@dataclass
class RegularizedConfig:
    alpha: float = 0.0
    epsilon: float = 0.0
    alpha0: float = 1e-2


@dataclass
class RunConfig:
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    dualfl: DualFLConfig = field(default_factory=DualFLConfig)
    local: LocalConfig = field(default_factory=LocalConfig)
    run: RunParams = field(default_factory=RunParams)
    baseline: BaselineConfig = field(default_factory=BaselineConfig)
    fista: FistaConfig = field(default_factory=FistaConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    regularized: RegularizedConfig = field(default_factory=RegularizedConfig)

    def set(self, key, value):
        section, _, name = key.partition(".")
        sub = getattr(self, section, None)
        if not name or sub is None or not dataclasses.is_dataclass(sub):
            raise ConfigurationError(f"unknown config key {key!r}")
        types = {f.name: f.type for f in dataclasses.fields(sub)}
        if name not in types:
            raise ConfigurationError(f"unknown config key {key!r}")
        setattr(sub, name, _coerce(key, value, types[name]))

    def flat(self, skip=("run.threads",)):
        out = {}
        for sec in dataclasses.fields(self):
            sub = getattr(self, sec.name)
            for f in dataclasses.fields(sub):
                key = f"{sec.name}.{f.name}"
                if key not in skip:
                    out[key] = getattr(sub, f.name)
        return out


def _coerce(key, value, typ):
    if not isinstance(value, str):
        value = str(value)
    text = value.strip().strip('"').strip("'")
    try:
        if typ == "bool":
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return low in ("true", "1", "yes")
        if typ == "int":
            return int(text)
        if typ == "float":
            return float(text)
    except ValueError:
        raise ConfigurationError(f"{key}: cannot parse {value!r} as {typ}") from None
    return text


def parse_config(text):
    cfg = RunConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigurationError(f"line {lineno}: expected 'key = value'")
        cfg.set(key.strip(), value)
    return cfg


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
