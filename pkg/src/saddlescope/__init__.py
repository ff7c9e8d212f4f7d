"""Stochastic-gradient saddle escape: models, oracles, recursion and verifiers."""
from .config import ConfigError, ExperimentConfig, config_from_dict, load_config
from .optimizer import CoupledPair, DivergedError, RunConfig, Trajectory, run, run_coupled
from .oracles import Oracle, OracleKind, estimate_gradient
from .problems import QuadraticModel, TwoLayerLogisticModel

__all__ = [
    "ConfigError",
    "CoupledPair",
    "DivergedError",
    "ExperimentConfig",
    "Oracle",
    "OracleKind",
    "QuadraticModel",
    "RunConfig",
    "Trajectory",
    "TwoLayerLogisticModel",
    "config_from_dict",
    "estimate_gradient",
    "load_config",
    "run",
    "run_coupled",
]
