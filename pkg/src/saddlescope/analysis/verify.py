"""Monte Carlo checks of the descent, deviation, escape and hitting-time claims."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..optimizer import RunConfig, Trajectory, _diverged, deviation_moments, run, run_coupled
from ..oracles import Oracle, OracleKind, _direction
from ..problems import CostModel, _check_point
from .escape import EscapeReport, measure_escape, predict_escape_time
from .regions import ClassifierParams, RegionLabel, classify_points

STATUSES = ("pass", "fail", "inconclusive", "skipped-premise")


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


@dataclass
class VerificationReport:
    check: str
    status: str
    statistic: float
    threshold: float
    stderr: float = 0.0
    n: int = 0
    seeds: list[int] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        """JSON-ready dict; non-finite numbers become null."""
        return _clean(
            {
                "check": self.check,
                "passed": self.passed,
                "status": self.status,
                "statistic": self.statistic,
                "threshold": self.threshold,
                "stderr": self.stderr,
                "n": self.n,
                "seeds": list(self.seeds),
                "details": self.details,
            }
        )


def _rng(seed_or_rng):
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng, []
    return np.random.default_rng(seed_or_rng), [int(seed_or_rng)]


def loglog_slope(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


# -- one-step descent ---------------------------------------------------------

def sample_region(model: CostModel, params: ClassifierParams, region, n: int, rng, box, max_draws: int):
    """Rejection-sample ``n`` points of ``region`` uniformly from ``box``."""
    lo, hi = (np.broadcast_to(np.asarray(b, dtype=float), (model.dimension,)) for b in box)
    label = RegionLabel(region).value
    found, drawn = [], 0
    while sum(len(f) for f in found) < n and drawn < max_draws:
        batch = min(max(4 * n, 1024), max_draws - drawn)
        cand = lo + (hi - lo) * rng.random((batch, model.dimension))
        drawn += batch
        found.append(cand[classify_points(model, cand, params) == label])
    pts = np.concatenate(found) if found else np.empty((0, model.dimension))
    return pts[:n], drawn


def verify_descent(
    model: CostModel,
    oracle: Oracle,
    params: ClassifierParams,
    region,
    n_trials: int,
    rng,
    box=(-2.0, 2.0),
    max_draws: int | None = None,
    z: float = 3.0,
) -> VerificationReport:
    """Mean one-step cost change conditioned on the region G or M.

    G is checked against ``-mu^2 c2 / pi`` and M against ``+mu^2 c2``, each
    with ``z`` standard errors of slack.
    """
    region = RegionLabel(region)
    if region is RegionLabel.H:
        raise ValueError("one-step bounds exist for G and M only")
    rng, seeds = _rng(rng)
    mu = params.step_size
    threshold = -mu**2 * params.c2 / params.pi if region is RegionLabel.G else mu**2 * params.c2
    name = f"descent-{region.value}"
    if not params.premise_holds:
        return VerificationReport(name, "skipped-premise", math.nan, threshold, seeds=seeds,
                                  details={"reason": "mu > 2/(delta(1+beta^2))"})
    pts, drawn = sample_region(model, params, region, n_trials, rng, box, max_draws or 2000 * n_trials)
    if len(pts) < n_trials:
        return VerificationReport(name, "inconclusive", math.nan, threshold, n=len(pts), seeds=seeds,
                                  details={"reason": "region sampler starved", "drawn": drawn})
    steps = np.array([_direction(oracle, model, w, rng) for w in pts])
    change = model.cost(pts - mu * steps) - model.cost(pts)
    mean = float(change.mean())
    se = float(change.std(ddof=1) / math.sqrt(n_trials))
    ok = mean <= threshold + z * se
    return VerificationReport(
        name, "pass" if ok else "fail", mean, threshold, se, n_trials, seeds,
        {"fraction_descending": float(np.mean(change < 0)), "drawn": drawn,
         "c1": params.c1, "c2": params.c2, "g_threshold": params.g_threshold},
    )


# -- limiting result ------------------------------------------------------------

def limiting_ratio(step_size: float, delta: float, k: int, T: float) -> tuple[float, float, float]:
    """Finite-mu value of ((1+mu d)^k / (1-mu d)^(k-1))^(T/mu) and its mu->0 limit."""
    if not step_size * delta < 1:
        raise ValueError("requires mu < 1/delta")
    if step_size <= 0:
        raise ValueError("step size must be positive")
    log_value = (T / step_size) * (k * math.log1p(step_size * delta) - (k - 1) * math.log1p(-step_size * delta))
    value = math.exp(log_value)
    limit = math.exp((2 * k - 1) * T * delta)
    return value, limit, abs(value - limit) / limit


def check_limits(ks=(1, 2, 3), step_size=1e-4, delta=1.0, T=1.0, tol=1e-3) -> list[VerificationReport]:
    out = []
    for k in ks:
        value, limit, err = limiting_ratio(step_size, delta, k, T)
        out.append(VerificationReport(
            f"limit-k{k}", "pass" if err < tol else "fail", err, tol,
            details={"value": value, "limit": limit, "mu": step_size, "delta": delta, "T": T},
        ))
    return out


# -- ensembles ------------------------------------------------------------------

def run_ensemble(model, oracle, w0, step_size, horizon, seeds: Sequence[int], record_stride=1) -> list[Trajectory]:
    return [run(model, oracle, w0, RunConfig(step_size, horizon, int(s), record_stride)) for s in seeds]


def escape_ensemble(
    model: CostModel,
    oracle: Oracle,
    w0,
    params: ClassifierParams,
    horizon: int,
    seeds: Sequence[int],
    sigma_l_sq: float | None = None,
) -> EscapeReport:
    predicted = None
    if sigma_l_sq:
        predicted = predict_escape_time(model.dimension, params.sigma_sq, sigma_l_sq, params.step_size, params.tau)
    report = EscapeReport(predicted)
    for traj in run_ensemble(model, oracle, w0, params.step_size, horizon, seeds):
        if not np.any(classify_points(model, traj.w, params) == "H"):
            report.never_in_h.append(traj.seed)
            continue
        report.outcomes.append(measure_escape(traj, model, params))
    return report


def deviation_study(model, oracle, anchor, step_sizes, T, seeds):
    """Sup over j <= T/mu of the deviation moments for each step size."""
    rows = []
    for mu in step_sizes:
        horizon = int(round(T / mu))
        pairs = [run_coupled(model, oracle, anchor, horizon, mu, int(s)) for s in seeds]
        m2, gap = deviation_moments(pairs, 2)
        m4, _ = deviation_moments(pairs, 4)
        rows.append({"mu": mu, "m2": float(m2.max()), "m4": float(m4.max()), "gap": float(gap.max())})
    return rows


def check_deviation_slopes(model, oracle, anchor, step_sizes=(0.04, 0.02, 0.01), T=2.0, seeds=range(200)):
    """Deviation upper bounds as one-sided slope checks (exponent at least nominal - 0.3)."""
    rows = deviation_study(model, oracle, anchor, step_sizes, T, seeds)
    mus = [r["mu"] for r in rows]
    out = []
    for key, nominal in (("m2", 1.0), ("m4", 2.0), ("gap", 2.0)):
        slope = loglog_slope(mus, [r[key] for r in rows])
        out.append(VerificationReport(
            f"deviation-{key}", "pass" if slope >= nominal - 0.3 else "fail", slope, nominal - 0.3,
            n=len(list(seeds)), seeds=[int(s) for s in seeds],
            details={"nominal_exponent": nominal, "per_mu": [{"mu": r["mu"], key: r[key]} for r in rows]},
        ))
    return out


# -- hitting M ------------------------------------------------------------------

def hitting_time(model, oracle, w0, params: ClassifierParams, seed: int, max_iter: int,
                 target=RegionLabel.M, chunk: int = 256) -> int | None:
    """First iteration whose iterate lies in ``target`` (0 if ``w0`` already does)."""
    w = _check_point(model, w0).copy()
    label = RegionLabel(target).value
    if classify_points(model, w[None, :], params)[0] == label:
        return 0
    rng = np.random.default_rng(seed)
    mu = params.step_size
    buf = np.empty((chunk, model.dimension))
    i = 0
    while i < max_iter:
        n = min(chunk, max_iter - i)
        for k in range(n):
            w = w - mu * _direction(oracle, model, w, rng)
            if _diverged(w):
                return None
            buf[k] = w
        hit = np.flatnonzero(classify_points(model, buf[:n], params) == label)
        if hit.size:
            return i + int(hit[0]) + 1
        i += n
    return None


def final_bound(model, params: ClassifierParams, w0, sigma_l_sq: float) -> float:
    if model.lower_bound is None:
        raise ValueError("model has no known lower bound")
    i_s = predict_escape_time(model.dimension, params.sigma_sq, sigma_l_sq, params.step_size, params.tau)
    gap = float(model.cost(np.asarray(w0, dtype=float))) - model.lower_bound
    return gap / (params.step_size**2 * params.c2 * params.pi) * i_s


def verify_final_bound(
    model: CostModel,
    oracle: Oracle,
    params: ClassifierParams,
    w0,
    n_seeds: int,
    seed: int = 0,
    sigma_l_sq: float | None = None,
    max_iter: int = 200_000,
) -> VerificationReport:
    """Empirical (1 - pi)-quantile of the first M-hitting time against the bound.

    ``sigma_l_sq`` defaults to the injected perturbation variance.
    """
    mu = params.step_size
    dim = model.dimension
    if sigma_l_sq is None:
        if not oracle.kind.perturbed or oracle.perturbation_std == 0:
            raise ValueError("sigma_l_sq is required for unperturbed oracles")
        sigma_l_sq = oracle.perturbation_std**2
    seeds = [seed + k for k in range(n_seeds)]
    premise = params.premise_holds and 0.5 * mu * dim * params.sigma_sq > mu**2 * params.c2 / params.pi
    bound = final_bound(model, params, w0, sigma_l_sq)
    if not premise:
        return VerificationReport("final-bound", "skipped-premise", math.nan, bound, seeds=seeds,
                                  details={"reason": "step size too large for the hitting-time bound"})
    cap = int(min(max_iter, math.ceil(bound)))
    times = [hitting_time(model, oracle, w0, params, s, cap) for s in seeds]
    t = np.array([math.inf if x is None else x for x in times], dtype=float)
    q = float(np.quantile(t, 1.0 - params.pi, method="higher"))
    if math.isinf(q):
        status = "fail" if cap >= bound else "inconclusive"
    else:
        status = "pass" if q <= bound else "fail"
    return VerificationReport(
        "final-bound", status, q, bound, n=n_seeds, seeds=seeds,
        details={"hitting_times": t.tolist(), "quantile": 1.0 - params.pi, "cap": cap,
                 "censored": int(np.isinf(t).sum())},
    )


# -- escape ---------------------------------------------------------------------

def check_escape_prediction(model, oracle, params: ClassifierParams, w0, sigma_l_sq, step_sizes, seeds,
                            horizon_factor: float = 20.0, factor: float = 2.0) -> list[VerificationReport]:
    """Median measured escape index within ``factor`` of the predicted one."""
    out = []
    for mu in step_sizes:
        p = params.with_step_size(mu)
        predicted = predict_escape_time(model.dimension, p.sigma_sq, sigma_l_sq, mu, p.tau)
        rep = escape_ensemble(model, oracle, w0, p, int(horizon_factor * predicted), seeds, sigma_l_sq)
        med = rep.median
        ok = predicted / factor <= med <= predicted * factor
        out.append(VerificationReport(
            f"escape-prediction-mu{mu:g}", "pass" if ok else "fail", med, float(predicted),
            n=len(rep.outcomes), seeds=[int(s) for s in seeds],
            details={"predicted": predicted, "ratio": med / predicted, "censor_rate": rep.censor_rate,
                     "factor": factor},
        ))
    return out


def check_escape_scaling(model, oracle, params: ClassifierParams, w0, step_sizes, seeds,
                         horizon_T: float = 25.0, band=(-1.3, -0.7)) -> VerificationReport:
    medians, rows = [], []
    for mu in step_sizes:
        rep = escape_ensemble(model, oracle, w0, params.with_step_size(mu), int(math.ceil(horizon_T / mu)), seeds)
        medians.append(rep.median)
        rows.append({"mu": mu, "median": rep.median, "censor_rate": rep.censor_rate})
    finite = [(m, t) for m, t in zip(step_sizes, medians) if math.isfinite(t)]
    if len(finite) < 2:
        return VerificationReport("escape-scaling", "inconclusive", math.nan, band[0], seeds=list(seeds),
                                  details={"per_mu": rows})
    slope = loglog_slope(*zip(*finite))
    ok = band[0] <= slope <= band[1]
    return VerificationReport("escape-scaling", "pass" if ok else "fail", slope, band[0],
                              n=len(list(seeds)), seeds=[int(s) for s in seeds],
                              details={"band": list(band), "per_mu": rows})


def check_basin_symmetry(model, oracle, params, w0, horizon, seeds, tol=0.1) -> VerificationReport:
    rep = escape_ensemble(model, oracle, w0, params, horizon, seeds)
    frac = rep.basin_fraction(+1)
    ok = abs(frac - 0.5) <= tol
    return VerificationReport("basin-symmetry", "pass" if ok else "fail", frac, 0.5,
                              n=len(rep.outcomes), seeds=[int(s) for s in seeds],
                              details={"tolerance": tol, "censor_rate": rep.censor_rate,
                                       "never_in_h": len(rep.never_in_h)})


def check_noiseless_control(model, saddle, params: ClassifierParams, horizon=100_000,
                            perturbation_stds=(1e-3, 0.1, 1.0), seed=0) -> list[VerificationReport]:
    """Exact gradients stay on the saddle; any Gaussian perturbation leaves it."""
    out = []
    exact = Oracle(OracleKind.EXACT)
    traj = run(model, exact, saddle, RunConfig(params.step_size, horizon, seed, 100))
    o = measure_escape(traj, model, params)
    out.append(VerificationReport("noiseless-stays", "pass" if o.censored else "fail",
                                  float(np.max(np.abs(traj.w - np.asarray(saddle)))), 0.0, n=1, seeds=[seed],
                                  details={"horizon": horizon, "censored": o.censored}))
    for sv in perturbation_stds:
        p = ClassifierParams(params.step_size, params.delta, params.beta, model.dimension * sv**2,
                             params.tau, params.pi)
        traj = run(model, Oracle(OracleKind.PERTURBED_EXACT, sv), saddle, RunConfig(params.step_size, horizon, seed))
        o = measure_escape(traj, model, p)
        out.append(VerificationReport(f"perturbed-escapes-{sv:g}", "fail" if o.censored else "pass",
                                      math.nan if o.censored else float(o.escape_index), float(horizon),
                                      n=1, seeds=[seed], details={"perturbation_std": sv}))
    return out
