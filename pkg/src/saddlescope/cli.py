"""``saddle-scope`` command-line front end.

Exit codes: 0 ok, 2 invalid input, 3 divergence, 4 a verification check failed.
Standard output carries only short summaries; data goes to files.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from .analysis.escape import EscapeReport, measure_escape, predict_escape_time
from .analysis.regions import classify_points, lambda_min
from .analysis.verify import loglog_slope
from .config import SEED_ENV, ConfigError, ExperimentConfig, load_config
from .optimizer import DivergedError, RunConfig, run, write_trajectory_csv
from .presets import PRESETS, get_preset
from .suites import SUITES, run_suite

EXIT_OK, EXIT_INVALID, EXIT_DIVERGED, EXIT_FAILED = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        out.writerows(rows)


def _sidecar(out: Path, suffix: str) -> Path:
    return out.with_name(out.stem + suffix)


def _regions(cfg: ExperimentConfig, W, step_size=None):
    params = cfg.params(step_size)
    if params is None:
        return ["-"] * len(W)
    return classify_points(cfg.model, W, params).tolist()


# -- commands -------------------------------------------------------------------

def cmd_run(cfg: ExperimentConfig, out: Path) -> int:
    traj = run(cfg.model, cfg.oracle, cfg.run.w0, cfg.run.run_config())
    regions = _regions(cfg, traj.w)
    write_trajectory_csv(traj, out, regions)
    print(f"iterations: {cfg.run.horizon}")
    print(f"final w: [{', '.join(f'{x:.6g}' for x in traj.final)}]")
    print(f"final cost: {traj.cost[-1]:.6g}")
    print(f"final region: {regions[-1]}")
    params = cfg.params()
    if params is not None and "H" in regions:
        o = measure_escape(traj, cfg.model, params)
        if o.censored:
            print(f"escape: entered H at {o.anchor_index}, not escaped within the horizon")
        else:
            print(f"escape: entered H at {o.anchor_index}, escaped after {o.escape_index} steps, basin {o.basin}")
    else:
        print("escape: trajectory never entered H")
    return EXIT_OK


def cmd_sweep(cfg: ExperimentConfig, step_sizes, n_seeds: int, out: Path) -> int:
    if len(step_sizes) < 2:
        raise UsageError("sweep needs at least two step sizes to fit a slope")
    if n_seeds < 50:
        raise UsageError("sweep needs at least 50 seeds")
    if cfg.classifier is None:
        raise UsageError("sweep needs a classifier section")
    seeds = range(cfg.run.seed, cfg.run.seed + n_seeds)
    stats, curves = [], []
    for mu in step_sizes:
        params = cfg.params(mu)
        horizon = int(math.ceil(cfg.sweep.horizon_T / mu))
        conf = [RunConfig(mu, horizon, s, cfg.sweep.record_stride) for s in seeds]
        trajs = [run(cfg.model, cfg.oracle, cfg.run.w0, c) for c in conf]
        sl = cfg.classifier.sigma_l_sq
        predicted = predict_escape_time(cfg.model.dimension, params.sigma_sq, sl, mu, params.tau) if sl else None
        rep = EscapeReport(predicted)
        for t in trajs:
            if np.any(classify_points(cfg.model, t.w, params) == "H"):
                rep.outcomes.append(measure_escape(t, cfg.model, params))
            else:
                rep.never_in_h.append(t.seed)
        stats.append((mu, rep))
        mean_cost = np.mean([t.cost for t in trajs], axis=0)
        for i, c1, cm in zip(trajs[0].index, trajs[0].cost, mean_cost):
            curves.append([_fmt(mu), int(i), _fmt(c1), _fmt(cm)])

    rows = []
    for mu, rep in stats:
        rows.append([
            _fmt(mu), n_seeds, len(rep.outcomes), len(rep.never_in_h), _fmt(rep.censor_rate),
            _fmt(rep.quantile(0.25)), _fmt(rep.median), _fmt(rep.quantile(0.75)),
            "" if rep.predicted_is is None else rep.predicted_is,
        ])
    _write_rows(out, ["mu", "n_seeds", "n_in_h", "n_never_in_h", "censor_rate",
                      "q25", "median", "q75", "predicted_is"], rows)
    _write_rows(_sidecar(out, ".curves.csv"), ["mu", "iter", "cost_seed0", "cost_mean"], curves)

    finite = [(mu, rep.median) for mu, rep in stats if math.isfinite(rep.median)]
    slope = loglog_slope(*zip(*finite)) if len(finite) >= 2 else math.nan
    excluded = [mu for mu, rep in stats if not math.isfinite(rep.median)]
    doc = {"slope": slope if math.isfinite(slope) else None, "step_sizes": list(step_sizes),
           "excluded_step_sizes": excluded, "n_seeds": n_seeds, "seed_root": cfg.run.seed}
    _sidecar(out, ".slope.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    for mu, rep in stats:
        print(f"mu={mu:g}: median escape {rep.median:g}, censored {rep.censor_rate:.3f}")
    print(f"log-log slope of median escape vs mu: {slope:.4f}" if math.isfinite(slope)
          else "log-log slope: not enough uncensored step sizes")
    return EXIT_OK


def cmd_verify(cfg: ExperimentConfig, suite: str, out: Path) -> int:
    reports = run_suite(suite, cfg)
    ok = all(r.status in ("pass", "skipped-premise") for r in reports)
    doc = {"suite": suite, "passed": ok, "reports": [r.to_dict() for r in reports]}
    out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    for r in reports:
        print(f"{r.status:>15}  {r.check}")
    print(f"{sum(r.passed for r in reports)}/{len(reports)} checks passed")
    return EXIT_OK if ok else EXIT_FAILED


def cmd_surface(cfg: ExperimentConfig, out: Path) -> int:
    if cfg.model.dimension != 2:
        raise UsageError(f"surface needs a 2-D model, got dimension {cfg.model.dimension}")
    g = cfg.surface
    axis = np.linspace(-g.w_max, g.w_max, g.n)
    A, B = np.meshgrid(axis, axis, indexing="ij")
    W = np.column_stack([A.ravel(), B.ravel()])
    cost = cfg.model.cost(W)
    grad = cfg.model.grad(W)
    lam = lambda_min(cfg.model, W)
    regions = _regions(cfg, W)
    rows = [[_fmt(w[0]), _fmt(w[1]), _fmt(c), _fmt(d @ d), _fmt(l), r]
            for w, c, d, l, r in zip(W, cost, grad, lam, regions)]
    _write_rows(out, ["w_0", "w_1", "cost", "grad_norm_sq", "lambda_min", "region"], rows)
    k = int(np.argmin(cost))
    print(f"grid: {g.n} x {g.n} on [-{g.w_max:g}, {g.w_max:g}]^2")
    print(f"grid minimum: cost {cost[k]:.6g} at ({W[k, 0]:.6g}, {W[k, 1]:.6g})")
    return EXIT_OK


# -- entry point ----------------------------------------------------------------

def _parse_mu_list(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise UsageError(f"--mu-list: cannot parse {text!r}") from None
    if any(not (v > 0 and math.isfinite(v)) for v in vals):
        raise UsageError("--mu-list: step sizes must be positive")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="saddle-scope",
        description="Stochastic-gradient saddle escape experiments.",
        epilog=f"The default seed root is read from ${SEED_ENV} when the config has no run.seed.",
    )
    p.add_argument("command", choices=["run", "sweep", "verify", "surface"])
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", type=Path, help="experiment JSON document")
    src.add_argument("--preset", choices=sorted(PRESETS), help="shipped experiment preset")
    p.add_argument("--out", type=Path, required=True, help="output file (CSV, or JSON for verify)")
    p.add_argument("--seeds", type=int, help="number of seeds for sweep and verify")
    p.add_argument("--mu-list", help="comma-separated step sizes for sweep")
    p.add_argument("--suite", default="all", choices=[*SUITES, "all"], help="verification suite")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else get_preset(args.preset)
        if args.seeds is not None:
            if args.seeds < 1:
                raise UsageError("--seeds must be positive")
            cfg = dataclasses.replace(
                cfg,
                sweep=dataclasses.replace(cfg.sweep, n_seeds=args.seeds),
                verify=dataclasses.replace(cfg.verify, n_seeds=args.seeds),
            )
        if args.command == "run":
            return cmd_run(cfg, args.out)
        if args.command == "sweep":
            mus = _parse_mu_list(args.mu_list) if args.mu_list else cfg.sweep.step_sizes
            return cmd_sweep(cfg, mus, cfg.sweep.n_seeds, args.out)
        if args.command == "verify":
            return cmd_verify(cfg, args.suite, args.out)
        return cmd_surface(cfg, args.out)
    except (ConfigError, UsageError, FileNotFoundError) as exc:
        print(f"saddle-scope: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except DivergedError as exc:
        print(f"saddle-scope: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
