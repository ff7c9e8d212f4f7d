"""Constant step-size recursion, trajectories and coupled short-term model runs."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .oracles import Oracle, _direction
from .problems import CostModel, _check_point

DIVERGENCE_RADIUS = 1e6


class DivergedError(RuntimeError):
    """Raised when an iterate leaves the finite ball of DIVERGENCE_RADIUS."""

    def __init__(self, last_index: int, last_w: np.ndarray):
        self.last_index = last_index
        self.last_w = np.asarray(last_w)
        super().__init__(
            f"iterates diverged after index {last_index} (|w| > {DIVERGENCE_RADIUS:g} or non-finite)"
        )


@dataclass(frozen=True)
class RunConfig:
    step_size: float
    horizon: int
    seed: int = 0
    record_stride: int = 1

    def __post_init__(self):
        if not (self.step_size >= 0 and np.isfinite(self.step_size)):
            raise ValueError("step_size must be a finite nonnegative number")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.record_stride < 1:
            raise ValueError("record_stride must be at least 1")

    def premise_holds(self, delta: float, beta: float = 0.0) -> bool:
        """Small step-size premise mu <= 2 / (delta (1 + beta^2))."""
        return self.step_size * delta * (1.0 + beta**2) <= 2.0


@dataclass
class Trajectory:
    index: np.ndarray
    w: np.ndarray
    cost: np.ndarray
    grad_norm_sq: np.ndarray
    seed: int
    config: RunConfig
    directions: np.ndarray | None = field(default=None, repr=False)

    @property
    def grad_norms(self) -> np.ndarray:
        return np.sqrt(self.grad_norm_sq)

    @property
    def iterates(self) -> list[tuple[int, np.ndarray]]:
        return list(zip(self.index.tolist(), self.w))

    @property
    def final(self) -> np.ndarray:
        return self.w[-1]

    def __len__(self):
        return len(self.index)


def _record_indices(horizon: int, stride: int) -> np.ndarray:
    idx = np.arange(0, horizon + 1, stride)
    if idx[-1] != horizon:
        idx = np.append(idx, horizon)
    return idx


def _finish(model, index, W, seed, config, directions=None) -> Trajectory:
    W = np.asarray(W, dtype=float)
    g = model.grad(W)
    return Trajectory(
        index=np.asarray(index),
        w=W,
        cost=np.asarray(model.cost(W), dtype=float),
        grad_norm_sq=np.einsum("ij,ij->i", g, g),
        seed=seed,
        config=config,
        directions=directions,
    )


def _diverged(w) -> bool:
    sq = float(w @ w)
    return not sq <= DIVERGENCE_RADIUS**2


def run(
    model: CostModel,
    oracle: Oracle,
    w0,
    config: RunConfig,
    *,
    log_directions: bool = False,
) -> Trajectory:
    """Iterate ``w <- w - mu * estimate(w)`` for ``config.horizon`` steps."""
    w = _check_point(model, w0).copy()
    rng = np.random.default_rng(config.seed)
    mu = config.step_size
    stride = config.record_stride
    record = _record_indices(config.horizon, stride)
    kept = [w.copy()]
    dirs = np.empty((config.horizon, model.dimension)) if log_directions else None
    for i in range(1, config.horizon + 1):
        d = _direction(oracle, model, w, rng)
        if dirs is not None:
            dirs[i - 1] = d
        w_next = w - mu * d
        if _diverged(w_next):
            raise DivergedError(i - 1, w)
        w = w_next
        if i % stride == 0 or i == config.horizon:
            kept.append(w.copy())
    return _finish(model, record, kept, config.seed, config, dirs)


@dataclass
class CoupledPair:
    """True recursion and its frozen-Hessian model driven by the same noise.

    ``noise[j]`` is the gradient noise drawn at the true iterate ``w_{i+j}``
    and consumed by both recursions at step ``j + 1``.
    """

    true_traj: Trajectory
    model_traj: Trajectory
    anchor: np.ndarray
    noise: np.ndarray
    deviations: np.ndarray

    @property
    def step_size(self) -> float:
        return self.true_traj.config.step_size

    @property
    def horizon(self) -> int:
        return self.true_traj.config.horizon

    def true_offsets(self) -> np.ndarray:
        """Deviation of the true iterates from the anchor, per j."""
        return self.anchor[None, :] - self.true_traj.w

    def model_offsets(self) -> np.ndarray:
        return self.anchor[None, :] - self.model_traj.w


def run_coupled(model: CostModel, oracle: Oracle, anchor, horizon: int, step_size: float, seed: int) -> CoupledPair:
    """Run the true recursion from ``anchor`` next to its short-term model.

    The model replaces the gradient by its second-order expansion around the
    anchor (frozen gradient and Hessian). Both recursions consume the noise
    realization drawn at the true iterate.
    """
    a = _check_point(model, anchor).copy()
    if not np.all(np.isfinite(a)):
        raise ValueError("anchor must be finite")
    config = RunConfig(step_size, horizon, seed, 1)
    rng = np.random.default_rng(seed)
    mu = step_size
    w = a.copy()
    wp = a.copy()
    W = np.empty((horizon + 1, model.dimension))
    Wp = np.empty_like(W)
    noise = np.empty((horizon, model.dimension))
    W[0] = w
    Wp[0] = wp
    frozen = model.taylor_model(a)
    for j in range(horizon):
        g = model.grad(w)
        d = _direction(oracle, model, w, rng)
        noise[j] = g - d
        # model step: wp - mu*(taylor(wp) - s) with s = g - d, arranged so the
        # quadratic case reproduces the true step bit for bit.
        wp_next = wp - mu * (d + (frozen(wp) - g))
        w_next = w - mu * d
        if _diverged(w_next) or _diverged(wp_next):
            raise DivergedError(j, w)
        w, wp = w_next, wp_next
        W[j + 1] = w
        Wp[j + 1] = wp
    idx = np.arange(horizon + 1)
    diff = W - Wp
    return CoupledPair(
        true_traj=_finish(model, idx, W, seed, config),
        model_traj=_finish(model, idx, Wp, seed, config),
        anchor=a,
        noise=noise,
        deviations=np.einsum("ij,ij->i", diff, diff),
    )


def deviation_moments(pairs: Sequence[CoupledPair], order: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Per-j Monte Carlo moments over an ensemble of coupled pairs.

    Returns ``(E||w~_j||^order, E||w~_j - w~'_j||^2)`` where ``w~_j`` is the
    true deviation from the anchor.
    """
    if not pairs:
        raise ValueError("ensemble must be non-empty")
    if order not in (2, 3, 4):
        raise ValueError("order must be 2, 3 or 4")
    first = pairs[0]
    for p in pairs[1:]:
        if (
            p.step_size != first.step_size
            or p.horizon != first.horizon
            or not np.array_equal(p.anchor, first.anchor)
        ):
            raise ValueError("all pairs in an ensemble must share step size, horizon and anchor")
    offsets = np.stack([p.true_offsets() for p in pairs])
    norms = np.linalg.norm(offsets, axis=-1)
    gaps = np.stack([p.deviations for p in pairs])
    return (norms**order).mean(axis=0), gaps.mean(axis=0)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trajectory_csv(traj: Trajectory, path, regions: Sequence[str] | None = None) -> None:
    m = traj.w.shape[1]
    regions = regions if regions is not None else ["-"] * len(traj)
    with open(Path(path), "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["iter", *[f"w_{k}" for k in range(m)], "cost", "grad_norm_sq", "region"])
        for i, w, c, g, r in zip(traj.index, traj.w, traj.cost, traj.grad_norm_sq, regions):
            out.writerow([int(i), *map(_fmt, w), _fmt(c), _fmt(g), r])


def write_coupled_csv(pair: CoupledPair, path, regions: Sequence[str] | None = None) -> None:
    t = pair.true_traj
    m = t.w.shape[1]
    regions = regions if regions is not None else ["-"] * len(t)
    with open(Path(path), "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(
            ["iter", *[f"w_{k}" for k in range(m)], "cost", "grad_norm_sq", "region",
             *[f"model_w_{k}" for k in range(m)], "deviation_sq"]
        )
        for j in range(len(t)):
            out.writerow(
                [int(t.index[j]), *map(_fmt, t.w[j]), _fmt(t.cost[j]), _fmt(t.grad_norm_sq[j]),
                 regions[j], *map(_fmt, pair.model_traj.w[j]), _fmt(pair.deviations[j])]
            )
