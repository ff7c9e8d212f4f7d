"""Named verification suites over the reference setups.

Each suite runs fixed reference problems; the experiment config only
contributes the seed root and Monte Carlo sample sizes.
"""
from __future__ import annotations

from .analysis.regions import ClassifierParams, RegionLabel
from .analysis.verify import (
    VerificationReport,
    check_basin_symmetry,
    check_deviation_slopes,
    check_escape_prediction,
    check_escape_scaling,
    check_limits,
    check_noiseless_control,
    verify_descent,
    verify_final_bound,
)
from .config import ExperimentConfig
from .optimizer import run_coupled
from .oracles import Oracle, OracleKind
from .presets import (
    CONVEX_QUADRATIC,
    LOGISTIC,
    PERTURBED_EXACT,
    PERTURBED_STOCHASTIC,
    QUADRATIC_SADDLE,
    TARGETED,
    _QUAD_SIGMA_SQ,
    fig1,
    fig2,
)
from .problems import QuadraticModel

SUITES = ("descent", "deviation", "limits", "escape", "final")


def _seeds(cfg: ExperimentConfig, n: int | None = None):
    return range(cfg.run.seed, cfg.run.seed + (cfg.verify.n_seeds if n is None else n))


def descent_suite(cfg: ExperimentConfig) -> list[VerificationReport]:
    trials = cfg.verify.descent_trials
    root = cfg.run.seed
    params = ClassifierParams(0.01, 1.0, 0.0, _QUAD_SIGMA_SQ, 0.1, 0.5)
    return [
        verify_descent(QUADRATIC_SADDLE, PERTURBED_STOCHASTIC, params, RegionLabel.G, trials, root,
                       box=(-2.0, 2.0)),
        verify_descent(CONVEX_QUADRATIC, PERTURBED_STOCHASTIC, params, RegionLabel.M, trials, root + 1,
                       box=(-0.3, 0.3)),
        _exact_descends(params, trials, root + 2),
    ]


def _exact_descends(params, trials, seed) -> VerificationReport:
    r = verify_descent(QUADRATIC_SADDLE, Oracle(OracleKind.EXACT), params, RegionLabel.G, trials, seed)
    frac = r.details.get("fraction_descending", 0.0)
    r.check = "descent-G-exact-every-draw"
    r.status = "pass" if frac == 1.0 else "fail"
    return r


def deviation_suite(cfg: ExperimentConfig) -> list[VerificationReport]:
    seeds = _seeds(cfg)
    reports = check_deviation_slopes(LOGISTIC, TARGETED, (0.0, 0.0), (0.04, 0.02, 0.01), 2.0, seeds)
    worst = 0.0
    for model in (QUADRATIC_SADDLE, QuadraticModel((2.0, -0.5, 0.3), grad_noise_std=1.0)):
        for s in range(cfg.run.seed, cfg.run.seed + 10):
            pair = run_coupled(model, PERTURBED_STOCHASTIC, [0.1] * model.dimension, 200, 0.01, s)
            worst = max(worst, float(pair.deviations.max()))
    reports.append(VerificationReport("deviation-quadratic-exact", "pass" if worst == 0.0 else "fail",
                                      worst, 0.0, n=20))
    return reports


def limits_suite(cfg: ExperimentConfig) -> list[VerificationReport]:
    return check_limits((1, 2, 3), 1e-4, 1.0, 1.0, 1e-3)


def escape_suite(cfg: ExperimentConfig) -> list[VerificationReport]:
    seeds = _seeds(cfg)
    saddle_params = ClassifierParams(0.01, 1.0, 0.0, 2.0, tau=1.0, pi=0.5)
    saddle = QuadraticModel((1.0, -1.0))
    # the quadratic saddle is unbounded below, so keep the horizon short enough
    # that escaped iterates stay inside the divergence ball
    reports = check_escape_prediction(saddle, PERTURBED_EXACT, saddle_params, (0.0, 0.0), 1.0,
                                      (0.02, 0.01), seeds, horizon_factor=5.0)
    f1 = fig1()
    reports += check_noiseless_control(LOGISTIC, (0.0, 0.0), f1.params(), seed=cfg.run.seed)
    f2 = fig2()
    reports.append(check_escape_scaling(LOGISTIC, TARGETED, f2.params(), f2.run.w0, f2.sweep.step_sizes, seeds,
                                        f2.sweep.horizon_T))
    reports.append(check_basin_symmetry(LOGISTIC, TARGETED, f1.params(), f1.run.w0, f1.run.horizon,
                                        _seeds(cfg, 2 * cfg.verify.n_seeds)))
    return reports


def final_suite(cfg: ExperimentConfig) -> list[VerificationReport]:
    params = ClassifierParams(0.01, LOGISTIC.lipschitz_grad, 1.0, 2.0, 0.1, 0.5)
    n = min(cfg.verify.n_seeds, 100)
    return [verify_final_bound(LOGISTIC, PERTURBED_STOCHASTIC, params, (-0.5, 0.5), n, cfg.run.seed)]


_RUNNERS = {
    "descent": descent_suite,
    "deviation": deviation_suite,
    "limits": limits_suite,
    "escape": escape_suite,
    "final": final_suite,
}


def run_suite(name: str, cfg: ExperimentConfig) -> list[VerificationReport]:
    if name == "all":
        return [r for s in SUITES for r in _RUNNERS[s](cfg)]
    if name not in _RUNNERS:
        raise ValueError(f"unknown suite {name!r}; choose from {list(SUITES) + ['all']}")
    return _RUNNERS[name](cfg)
