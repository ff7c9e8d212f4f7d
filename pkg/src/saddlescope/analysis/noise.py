"""Empirical checks of the gradient-noise assumptions at fixed iterates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from ..oracles import Oracle, sample_noise
from ..problems import CostModel


def estimate_noise_covariance(oracle: Oracle, model: CostModel, w, n: int, rng) -> np.ndarray:
    """Empirical second-moment matrix E{s s^T} of ``n`` noise draws at ``w``."""
    if n < 1000:
        raise ValueError("estimate_noise_covariance needs n >= 1000")
    s = sample_noise(oracle, model, w, n, rng)
    return s.T @ s / n


@dataclass
class NoiseMomentFit:
    beta4_hat: float
    sigma4_hat: float
    grad_norm4: np.ndarray
    fourth_moments: np.ndarray
    fourth_stderr: np.ndarray
    second_moments: np.ndarray
    residuals: np.ndarray
    second_moment_ok: np.ndarray

    @property
    def beta_sq(self) -> float:
        return float(np.sqrt(self.beta4_hat))

    @property
    def sigma_sq(self) -> float:
        return float(np.sqrt(self.sigma4_hat))

    def bound(self, grad_norm4) -> np.ndarray:
        return self.beta4_hat * np.asarray(grad_norm4) + self.sigma4_hat


def fit_noise_moments(
    oracle: Oracle,
    model: CostModel,
    probe_points,
    n_per_point: int,
    rng,
    slack: float = 3.0,
) -> NoiseMomentFit:
    """Smallest (beta^4, sigma^4) whose bound dominates every probe.

    Each probe contributes the constraint ``beta4*||grad||^4 + sigma4 >=
    m4 + slack*se`` with ``m4`` the empirical E||s||^4 and ``se`` its
    standard error; the linear program minimizes the summed bound.
    """
    if n_per_point < 10_000:
        raise ValueError("fit_noise_moments needs n_per_point >= 1e4")
    pts = np.atleast_2d(np.asarray(probe_points, dtype=float))
    g4, m4, se4, m2 = [], [], [], []
    for w in pts:
        g = model.grad(w)
        s = sample_noise(oracle, model, w, n_per_point, rng)
        sq = np.einsum("ij,ij->i", s, s)
        g4.append(float(g @ g) ** 2)
        m4.append(float(np.mean(sq**2)))
        se4.append(float(np.std(sq**2, ddof=1) / np.sqrt(n_per_point)))
        m2.append(float(np.mean(sq)))
    g4, m4, se4, m2 = map(np.asarray, (g4, m4, se4, m2))
    target = m4 + slack * se4

    if np.all(target <= 0):
        beta4, sigma4 = 0.0, 0.0
    else:
        scale = max(target.max(), 1e-300)
        gs = max(g4.max(), 1e-300)
        res = linprog(
            c=[g4.sum() / gs + 1e-9, float(len(g4))],
            A_ub=-np.column_stack([g4 / gs, np.ones_like(g4)]),
            b_ub=-target / scale,
            bounds=[(0, None), (0, None)],
            method="highs",
        )
        if not res.success:
            raise RuntimeError(f"moment fit failed: {res.message}")
        beta4 = float(res.x[0]) * scale / gs
        sigma4 = float(res.x[1]) * scale
        # guard against solver round-off leaving a constraint a hair short
        short = np.max(target - (beta4 * g4 + sigma4))
        if short > 0:
            sigma4 += short
    bound = beta4 * g4 + sigma4
    second_bound = np.sqrt(beta4) * np.sqrt(g4) + np.sqrt(sigma4)
    return NoiseMomentFit(
        beta4_hat=beta4,
        sigma4_hat=sigma4,
        grad_norm4=g4,
        fourth_moments=m4,
        fourth_stderr=se4,
        second_moments=m2,
        residuals=bound - m4,
        second_moment_ok=m2 <= second_bound * (1 + 1e-12),
    )


@dataclass
class CovarianceLipschitzProbe:
    beta_r_hat: float | None
    gamma_hat: float | None
    flag: str
    distances: np.ndarray
    differences: np.ndarray
    noise_floor: np.ndarray


def _cov_and_var(oracle, model, w, n, rng):
    s = sample_noise(oracle, model, w, n, rng)
    outer = s[:, :, None] * s[:, None, :]
    return outer.mean(axis=0), outer.var(axis=0, ddof=1) / n


def covariance_lipschitz_probe(
    oracle: Oracle,
    model: CostModel,
    point_pairs,
    n: int,
    rng,
    z: float = 4.0,
) -> CovarianceLipschitzProbe:
    """Fit ``||R(x) - R(y)|| <= beta_R ||x - y||^gamma`` over probe pairs.

    Differences below ``z`` times their Monte Carlo noise floor count as
    zero. Flags: ``"constant covariance"`` when every pair is statistically
    zero, ``"inconclusive"`` when fewer than two pairs carry signal or the
    fitted exponent leaves (0, 4], ``"fitted"`` otherwise.
    """
    dists, diffs, floors = [], [], []
    for x, y in point_pairs:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        Rx, vx = _cov_and_var(oracle, model, x, n, rng)
        Ry, vy = _cov_and_var(oracle, model, y, n, rng)
        dists.append(float(np.linalg.norm(x - y)))
        diffs.append(float(np.linalg.norm(Rx - Ry, ord=2)))
        floors.append(float(np.sqrt(np.sum(vx + vy))))
    dists, diffs, floors = map(np.asarray, (dists, diffs, floors))
    signal = diffs > z * floors
    if not signal.any():
        return CovarianceLipschitzProbe(None, None, "constant covariance", dists, diffs, floors)
    if signal.sum() < 2 or np.unique(dists[signal]).size < 2:
        return CovarianceLipschitzProbe(None, None, "inconclusive", dists, diffs, floors)
    gamma = float(np.polyfit(np.log(dists[signal]), np.log(diffs[signal]), 1)[0])
    if not 0.0 < gamma <= 4.0:
        return CovarianceLipschitzProbe(None, gamma, "inconclusive", dists, diffs, floors)
    beta_r = float(np.max(diffs[signal] / dists[signal] ** gamma))
    return CovarianceLipschitzProbe(beta_r, gamma, "fitted", dists, diffs, floors)
