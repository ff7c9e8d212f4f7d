"""Shipped experiment presets.

The logistic presets mirror the two-layer example: ridge 0.1, start at
(-0.5, 0.5), noise injected along (1, 1)/sqrt(2). Step size 0.01 and unit
perturbation scale are choices, since neither is reported for the figures.
"""
from __future__ import annotations

import math

from .config import ClassifierSection, ExperimentConfig, RunSection, SweepSection
from .oracles import Oracle, OracleKind
from .problems import QuadraticModel, TwoLayerLogisticModel

LOGISTIC = TwoLayerLogisticModel(reg=0.1, label_mean=1.0, feature_noise_std=0.5)
QUADRATIC_SADDLE = QuadraticModel((1.0, -1.0), grad_noise_std=0.5)
CONVEX_QUADRATIC = QuadraticModel((1.0, 1.0), grad_noise_std=0.5)

DIAGONAL = (1 / math.sqrt(2), 1 / math.sqrt(2))
TARGETED = Oracle(OracleKind.TARGETED_STOCHASTIC, 1.0, DIAGONAL, 1)
PERTURBED_STOCHASTIC = Oracle(OracleKind.PERTURBED_STOCHASTIC, 1.0)
PERTURBED_EXACT = Oracle(OracleKind.PERTURBED_EXACT, 1.0)

# second-moment noise level per coordinate: data noise 0.25 + perturbation 1
_QUAD_SIGMA_SQ = 2 * (0.5**2 + 1.0)


def fig1() -> ExperimentConfig:
    return ExperimentConfig(
        model=LOGISTIC,
        oracle=TARGETED,
        run=RunSection(step_size=0.01, horizon=2000, seed=0, w0=(-0.5, 0.5)),
        classifier=ClassifierSection(tau=0.1, pi=0.5, beta=1.0, sigma_sq=1.0, sigma_l_sq=1.0),
    )


def fig2() -> ExperimentConfig:
    return ExperimentConfig(
        model=LOGISTIC,
        oracle=TARGETED,
        run=RunSection(step_size=0.01, horizon=2500, seed=0, w0=(-0.5, 0.5)),
        classifier=ClassifierSection(tau=0.1, pi=0.5, beta=1.0, sigma_sq=1.0, sigma_l_sq=1.0),
        sweep=SweepSection(step_sizes=(0.04, 0.02, 0.01), n_seeds=200, horizon_T=25.0),
    )


def quadratic_saddle() -> ExperimentConfig:
    return ExperimentConfig(
        model=QUADRATIC_SADDLE,
        oracle=PERTURBED_STOCHASTIC,
        run=RunSection(step_size=0.01, horizon=1000, seed=0, w0=(0.0, 0.0)),
        classifier=ClassifierSection(tau=0.1, pi=0.5, beta=0.0, sigma_sq=_QUAD_SIGMA_SQ, sigma_l_sq=1.25),
        sweep=SweepSection(step_sizes=(0.05, 0.025), n_seeds=200, horizon_T=20.0),
    )


def convex_quadratic() -> ExperimentConfig:
    return ExperimentConfig(
        model=CONVEX_QUADRATIC,
        oracle=PERTURBED_STOCHASTIC,
        run=RunSection(step_size=0.01, horizon=1000, seed=0, w0=(1.0, 0.0)),
        classifier=ClassifierSection(tau=0.1, pi=0.5, beta=0.0, sigma_sq=_QUAD_SIGMA_SQ),
    )


PRESETS = {
    "fig1": fig1,
    "fig2": fig2,
    "quadratic-saddle": quadratic_saddle,
    "convex-quadratic": convex_quadratic,
}


def get_preset(name: str) -> ExperimentConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
