"""Experiment configuration documents.

One JSON object holds the model, oracle, run settings, classifier constants
and per-command options. Unknown keys are rejected with their dotted path,
e.g. ``config.run.stepsize: unknown key``.
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from typing import Any

from .analysis.regions import ClassifierParams
from .oracles import Oracle, oracle_from_dict
from .optimizer import RunConfig
from .problems import CostModel, model_from_dict

SEED_ENV = "SADDLE_SCOPE_SEED"


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


class ConfigError(ValueError):
    pass


def _strict(doc, allowed, path):
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected an object")
    for key in doc:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown key")
    return doc


def _num(doc, key, path, default=None, kind=float):
    if key not in doc:
        if default is None:
            raise ConfigError(f"{path}.{key}: required")
        return default
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number")
    if kind is int:
        if int(v) != v:
            raise ConfigError(f"{path}.{key}: expected an integer")
        return int(v)
    return float(v)


@dataclass(frozen=True)
class RunSection:
    step_size: float = 0.01
    horizon: int = 2000
    seed: int = 0
    record_stride: int = 1
    w0: tuple[float, ...] = (-0.5, 0.5)

    def run_config(self) -> RunConfig:
        return RunConfig(self.step_size, self.horizon, self.seed, self.record_stride)


@dataclass(frozen=True)
class ClassifierSection:
    """Classifier constants; ``delta`` defaults to the model's certificate."""

    tau: float = 0.1
    pi: float = 0.5
    beta: float = 1.0
    sigma_sq: float = 1.0
    delta: float | None = None
    sigma_l_sq: float | None = None

    def params(self, model: CostModel, step_size: float) -> ClassifierParams:
        delta = self.delta if self.delta is not None else model.lipschitz_grad
        return ClassifierParams(step_size, delta, self.beta, self.sigma_sq, self.tau, self.pi)


@dataclass(frozen=True)
class SweepSection:
    step_sizes: tuple[float, ...] = (0.04, 0.02, 0.01)
    n_seeds: int = 200
    horizon_T: float = 25.0
    record_stride: int = 1


@dataclass(frozen=True)
class SurfaceSection:
    w_max: float = 2.0
    n: int = 101


@dataclass(frozen=True)
class VerifySection:
    n_seeds: int = 200
    descent_trials: int = 10_000


@dataclass(frozen=True)
class ExperimentConfig:
    model: CostModel
    oracle: Oracle
    run: RunSection = field(default_factory=RunSection)
    classifier: ClassifierSection | None = field(default_factory=ClassifierSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    surface: SurfaceSection = field(default_factory=SurfaceSection)
    verify: VerifySection = field(default_factory=VerifySection)

    def params(self, step_size: float | None = None) -> ClassifierParams | None:
        if self.classifier is None:
            return None
        return self.classifier.params(self.model, self.run.step_size if step_size is None else step_size)

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model.to_dict(),
            "oracle": self.oracle.to_dict(),
            "run": {**asdict(self.run), "w0": list(self.run.w0)},
            "classifier": None if self.classifier is None else asdict(self.classifier),
            "sweep": {**asdict(self.sweep), "step_sizes": list(self.sweep.step_sizes)},
            "surface": asdict(self.surface),
            "verify": asdict(self.verify),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


_TOP = {"model", "oracle", "run", "classifier", "sweep", "surface", "verify"}


def _vector(doc, key, path, default):
    if key not in doc:
        return default
    v = doc[key]
    if not isinstance(v, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        raise ConfigError(f"{path}.{key}: expected a list of numbers")
    return tuple(float(x) for x in v)


def config_from_dict(doc: dict[str, Any], path: str = "config") -> ExperimentConfig:
    _strict(doc, _TOP, path)
    if "model" not in doc:
        raise ConfigError(f"{path}.model: required")
    try:
        model = model_from_dict(doc["model"], f"{path}.model")
        oracle = oracle_from_dict(doc.get("oracle", {"kind": "exact"}), f"{path}.oracle")
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    d = RunSection()
    r = _strict(doc.get("run", {}), {"step_size", "horizon", "seed", "record_stride", "w0"}, f"{path}.run")
    p = f"{path}.run"
    seed_default = default_seed()
    run = RunSection(
        step_size=_num(r, "step_size", p, d.step_size),
        horizon=_num(r, "horizon", p, d.horizon, int),
        seed=_num(r, "seed", p, seed_default, int) if "seed" in r else seed_default,
        record_stride=_num(r, "record_stride", p, d.record_stride, int),
        w0=_vector(r, "w0", p, (0.0,) * model.dimension if model.dimension != 2 else d.w0),
    )
    if len(run.w0) != model.dimension:
        raise ConfigError(f"{p}.w0: expected {model.dimension} entries")
    try:
        run.run_config()
    except ValueError as exc:
        raise ConfigError(f"{p}: {exc}") from exc

    classifier = None
    if doc.get("classifier", {}) is not None:
        c = _strict(doc.get("classifier", {}), {"tau", "pi", "beta", "sigma_sq", "delta", "sigma_l_sq"},
                    f"{path}.classifier")
        p = f"{path}.classifier"
        dc = ClassifierSection()
        classifier = ClassifierSection(
            tau=_num(c, "tau", p, dc.tau),
            pi=_num(c, "pi", p, dc.pi),
            beta=_num(c, "beta", p, dc.beta),
            sigma_sq=_num(c, "sigma_sq", p, dc.sigma_sq),
            delta=None if c.get("delta") is None else _num(c, "delta", p),
            sigma_l_sq=None if c.get("sigma_l_sq") is None else _num(c, "sigma_l_sq", p),
        )
        try:
            classifier.params(model, run.step_size)
        except ValueError as exc:
            raise ConfigError(f"{p}: {exc}") from exc

    s = _strict(doc.get("sweep", {}), {"step_sizes", "n_seeds", "horizon_T", "record_stride"}, f"{path}.sweep")
    p = f"{path}.sweep"
    ds = SweepSection()
    sweep = SweepSection(
        step_sizes=_vector(s, "step_sizes", p, ds.step_sizes),
        n_seeds=_num(s, "n_seeds", p, ds.n_seeds, int),
        horizon_T=_num(s, "horizon_T", p, ds.horizon_T),
        record_stride=_num(s, "record_stride", p, ds.record_stride, int),
    )

    g = _strict(doc.get("surface", {}), {"w_max", "n"}, f"{path}.surface")
    p = f"{path}.surface"
    dg = SurfaceSection()
    surface = SurfaceSection(w_max=_num(g, "w_max", p, dg.w_max), n=_num(g, "n", p, dg.n, int))
    if surface.n < 1:
        raise ConfigError(f"{p}.n: must be at least 1")

    v = _strict(doc.get("verify", {}), {"n_seeds", "descent_trials"}, f"{path}.verify")
    p = f"{path}.verify"
    dv = VerifySection()
    verify = VerifySection(
        n_seeds=_num(v, "n_seeds", p, dv.n_seeds, int),
        descent_trials=_num(v, "descent_trials", p, dv.descent_trials, int),
    )
    return ExperimentConfig(model, oracle, run, classifier, sweep, surface, verify)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: malformed JSON ({exc})") from exc
    return config_from_dict(doc)
