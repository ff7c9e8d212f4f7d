"""Large-gradient / strict-saddle / second-order-stationary region taxonomy."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ..problems import CostModel, _check_point


class RegionLabel(str, enum.Enum):
    G = "G"
    H = "H"
    M = "M"


@dataclass(frozen=True)
class ClassifierParams:
    """Step size and noise constants that fix the region boundaries.

    ``delta`` is the gradient Lipschitz constant, ``beta`` and ``sigma_sq``
    the relative and absolute gradient-noise constants.
    """

    step_size: float
    delta: float
    beta: float = 0.0
    sigma_sq: float = 1.0
    tau: float = 0.1
    pi: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.pi < 1.0:
            raise ValueError(f"pi must lie in (0, 1), got {self.pi}")
        if self.step_size < 0 or self.delta < 0 or self.sigma_sq < 0 or self.beta < 0:
            raise ValueError("step_size, delta, beta and sigma_sq must be nonnegative")
        if self.tau <= 0:
            raise ValueError("tau must be positive")

    @property
    def c1(self) -> float:
        return 1.0 - self.step_size * (self.delta / 2.0) * (1.0 + self.beta**2)

    @property
    def c2(self) -> float:
        return (self.delta / 2.0) * self.sigma_sq

    @property
    def g_threshold(self) -> float:
        """Squared-gradient boundary of G; infinite once c1 <= 0."""
        if self.step_size == 0:
            return 0.0
        if self.c1 <= 0:
            return math.inf
        return self.step_size * (self.c2 / self.c1) * (1.0 + 1.0 / self.pi)

    @property
    def premise_holds(self) -> bool:
        return self.step_size * self.delta * (1.0 + self.beta**2) <= 2.0

    def with_step_size(self, step_size: float) -> "ClassifierParams":
        return ClassifierParams(step_size, self.delta, self.beta, self.sigma_sq, self.tau, self.pi)

    def to_dict(self) -> dict:
        return {
            "step_size": self.step_size,
            "delta": self.delta,
            "beta": self.beta,
            "sigma_sq": self.sigma_sq,
            "tau": self.tau,
            "pi": self.pi,
        }


def compute_constants(params: ClassifierParams) -> tuple[float, float, float]:
    return params.c1, params.c2, params.g_threshold


def lambda_min(model: CostModel, W) -> np.ndarray:
    return np.linalg.eigvalsh(model.hessian(np.asarray(W, dtype=float)))[..., 0]


def classify_points(model: CostModel, W, params: ClassifierParams) -> np.ndarray:
    """Vectorized labels for an (n, M) array of points, as one-letter strings."""
    W = np.atleast_2d(np.asarray(W, dtype=float))
    g = model.grad(W)
    gsq = np.einsum("ij,ij->i", g, g)
    lam = lambda_min(model, W)
    out = np.where(lam <= -params.tau, "H", "M")
    return np.where(gsq >= params.g_threshold, "G", out)


def classify(w, model: CostModel, params: ClassifierParams) -> RegionLabel:
    w = _check_point(model, w)
    if not np.all(np.isfinite(w)):
        raise ValueError("w must be finite")
    return RegionLabel(str(classify_points(model, w[None, :], params)[0]))


@dataclass(frozen=True)
class SpectralSplit:
    eigvals_nonneg: np.ndarray
    eigvals_neg: np.ndarray
    basis_nonneg: np.ndarray
    basis_neg: np.ndarray

    @property
    def eigvals(self) -> np.ndarray:
        return np.concatenate([self.eigvals_nonneg, self.eigvals_neg])

    @property
    def basis(self) -> np.ndarray:
        return np.hstack([self.basis_nonneg, self.basis_neg])

    def reassemble(self) -> np.ndarray:
        V = self.basis
        return V @ np.diag(self.eigvals) @ V.T


def _fix_signs(V: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    V = V.copy()
    for k in range(V.shape[1]):
        nz = np.flatnonzero(np.abs(V[:, k]) > tol)
        if nz.size and V[nz[0], k] < 0:
            V[:, k] = -V[:, k]
    return V


def spectral_split(hessian) -> SpectralSplit:
    """Eigendecomposition split at the sign boundary, eigenvalues descending.

    Eigenvector signs are fixed so the first nonzero component is positive.
    """
    H = np.asarray(hessian, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("expected a square matrix")
    if np.max(np.abs(H - H.T), initial=0.0) > 1e-10:
        raise ValueError("matrix is not symmetric")
    vals, vecs = np.linalg.eigh(0.5 * (H + H.T))
    vals, vecs = vals[::-1], _fix_signs(vecs[:, ::-1])
    neg = vals < 0
    return SpectralSplit(vals[~neg], vals[neg], vecs[:, ~neg], vecs[:, neg])


class AssumptionError(ValueError):
    """A modeling assumption needed by the computation does not hold."""


def saddle_noise_floor(R_s, split: SpectralSplit) -> float:
    """Smallest eigenvalue of the noise covariance projected on negative curvature."""
    if split.basis_neg.shape[1] == 0:
        raise AssumptionError("no negative curvature: the saddle-noise condition is vacuous")
    R = np.asarray(R_s, dtype=float)
    V = split.basis_neg
    P = V.T @ R @ V
    return float(np.linalg.eigvalsh(0.5 * (P + P.T))[0])
