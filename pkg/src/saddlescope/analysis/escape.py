"""Escape-time prediction and measurement around strict saddle points."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..optimizer import Trajectory
from ..problems import CostModel
from .regions import AssumptionError, ClassifierParams, classify_points, spectral_split


def predict_escape_time(
    dimension: int,
    sigma_sq: float,
    sigma_l_sq: float,
    step_size: float,
    tau: float,
    correction: float = 0.0,
) -> int:
    """Iterations after which descent through a strict saddle is guaranteed.

    ``log(2 M sigma^2 / sigma_l^2 + 1 + correction) / log(1 + 2 mu tau)``,
    rounded up and never below one. ``correction`` stands for the
    unspecified O(mu) term and defaults to zero.
    """
    if sigma_l_sq == 0:
        raise AssumptionError("sigma_l^2 = 0: no noise along negative curvature, escape is not guaranteed")
    if min(dimension, sigma_sq, sigma_l_sq, step_size, tau) <= 0:
        raise ValueError("all arguments must be positive")
    ratio = 0.0 if math.isinf(sigma_l_sq) else sigma_sq / sigma_l_sq
    num = math.log(2.0 * dimension * ratio + 1.0 + correction)
    return max(1, math.ceil(num / math.log1p(2.0 * step_size * tau)))


@dataclass
class EscapeOutcome:
    seed: int
    anchor_index: int
    escape_index: int | None
    censored: bool
    horizon: int
    basin: int | None = None


def escape_margin(params: ClassifierParams, dimension: int) -> float:
    """Required cost decrease below the anchor: a quarter of mu*M*sigma^2."""
    return 0.25 * params.step_size * dimension * params.sigma_sq


def measure_escape(
    trajectory: Trajectory,
    model: CostModel,
    params: ClassifierParams,
    anchor_index: int | None = None,
) -> EscapeOutcome:
    """First j >= 1 after the anchor with the iterate outside H and low cost.

    The anchor defaults to the first recorded iterate labelled H. ``basin``
    is the sign of the final iterate's offset from the anchor along the
    anchor's negative-curvature eigenvector.
    """
    labels = classify_points(model, trajectory.w, params)
    if anchor_index is None:
        hits = np.flatnonzero(labels == "H")
        if hits.size == 0:
            raise ValueError("trajectory never enters the strict-saddle region H")
        k = int(hits[0])
    else:
        k = int(np.searchsorted(trajectory.index, anchor_index))
        if k >= len(trajectory) or trajectory.index[k] != anchor_index or labels[k] != "H":
            raise ValueError("anchor must be a recorded iterate inside H")
    start = int(trajectory.index[k])
    level = trajectory.cost[k] - escape_margin(params, model.dimension)
    after = np.flatnonzero((labels[k + 1:] != "H") & (trajectory.cost[k + 1:] <= level))
    horizon = int(trajectory.index[-1] - start)
    if after.size == 0:
        return EscapeOutcome(trajectory.seed, start, None, True, horizon)
    j = int(trajectory.index[k + 1 + after[0]] - start)
    split = spectral_split(model.hessian(trajectory.w[k]))
    basin = None
    if split.basis_neg.shape[1]:
        v = split.basis_neg[:, -1]
        basin = int(np.sign((trajectory.final - trajectory.w[k]) @ v)) or None
    return EscapeOutcome(trajectory.seed, start, j, False, horizon, basin)


@dataclass
class EscapeReport:
    predicted_is: int | None
    outcomes: list[EscapeOutcome] = field(default_factory=list)
    # seeds whose trajectory never visited H; they carry no escape time
    never_in_h: list[int] = field(default_factory=list)

    @property
    def escape_times(self) -> np.ndarray:
        """Per-seed escape indices with censored runs as +inf."""
        return np.array(
            [math.inf if o.censored else o.escape_index for o in self.outcomes], dtype=float
        )

    @property
    def censor_rate(self) -> float:
        return float(np.mean([o.censored for o in self.outcomes])) if self.outcomes else math.nan

    def quantile(self, q: float) -> float:
        t = self.escape_times
        if t.size == 0:
            return math.nan
        return float(np.quantile(t, q, method="higher"))

    @property
    def median(self) -> float:
        t = self.escape_times
        return float(np.median(t)) if t.size else math.nan

    def basin_fraction(self, sign: int = 1) -> float:
        b = [o.basin for o in self.outcomes if not o.censored and o.basin is not None]
        return float(np.mean([x == sign for x in b])) if b else math.nan
