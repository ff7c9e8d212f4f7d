"""Update-direction constructions and the gradient noise they induce.

Random draws within one estimate follow a fixed order: data samples first,
then the perturbation. A caller that owns one generator per trajectory
therefore gets the same stream consumption whatever the iterate values are,
which is what the coupled runs in :mod:`saddlescope.optimizer` rely on.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .problems import CostModel, _check_point


class OracleKind(str, enum.Enum):
    EXACT = "exact"
    STOCHASTIC = "stochastic"
    PERTURBED_EXACT = "perturbed_exact"
    PERTURBED_STOCHASTIC = "perturbed_stochastic"
    TARGETED_STOCHASTIC = "targeted_stochastic"

    @property
    def uses_data(self) -> bool:
        return self in (
            OracleKind.STOCHASTIC,
            OracleKind.PERTURBED_STOCHASTIC,
            OracleKind.TARGETED_STOCHASTIC,
        )

    @property
    def perturbed(self) -> bool:
        return self in (
            OracleKind.PERTURBED_EXACT,
            OracleKind.PERTURBED_STOCHASTIC,
            OracleKind.TARGETED_STOCHASTIC,
        )


@dataclass(frozen=True)
class Oracle:
    """Immutable descriptor of an update direction.

    ``perturbation_std`` is the injected noise scale; ``direction`` is the unit
    vector used by the targeted kind; ``gate_threshold`` (optional) restricts
    the perturbation to steps where the unperturbed estimate has squared norm
    below the threshold.
    """

    kind: OracleKind = OracleKind.EXACT
    perturbation_std: float = 0.0
    direction: tuple[float, ...] | None = None
    minibatch: int = 1
    gate_threshold: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", OracleKind(self.kind))
        if self.perturbation_std < 0:
            raise ValueError("perturbation_std must be nonnegative")
        if self.minibatch < 1:
            raise ValueError("minibatch must be a positive integer")
        if self.kind is OracleKind.TARGETED_STOCHASTIC:
            if self.direction is None:
                raise ValueError("targeted oracle requires a direction")
            d = np.asarray(self.direction, dtype=float)
            norm = np.linalg.norm(d)
            if not np.isfinite(norm) or norm == 0:
                raise ValueError("direction must be a finite nonzero vector")
            # unit vectors are kept verbatim so serialization round-trips exactly
            if abs(norm - 1.0) > 1e-12:
                d = d / norm
            object.__setattr__(self, "direction", tuple(float(v) for v in d))
        elif self.direction is not None:
            object.__setattr__(self, "direction", tuple(float(v) for v in self.direction))

    def injected_covariance(self, dimension: int) -> np.ndarray:
        """Covariance of the perturbation alone (zero for unperturbed kinds)."""
        var = self.perturbation_std**2
        if self.kind is OracleKind.TARGETED_STOCHASTIC:
            d = np.asarray(self.direction)
            return var * np.outer(d, d)
        if self.kind.perturbed:
            return var * np.eye(dimension)
        return np.zeros((dimension, dimension))

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "perturbation_std": self.perturbation_std,
            "direction": None if self.direction is None else list(self.direction),
            "minibatch": self.minibatch,
            "gate_threshold": self.gate_threshold,
        }


_ORACLE_KEYS = {"kind", "perturbation_std", "direction", "minibatch", "gate_threshold"}


def oracle_from_dict(doc: dict[str, Any], path: str = "oracle") -> Oracle:
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: expected an object")
    extra = set(doc) - _ORACLE_KEYS
    if extra:
        raise ValueError(f"{path}.{sorted(extra)[0]}: unknown field")
    try:
        kind = OracleKind(doc.get("kind", "exact"))
    except ValueError:
        raise ValueError(f"{path}.kind: unknown oracle kind {doc.get('kind')!r}") from None
    direction = doc.get("direction")
    gate = doc.get("gate_threshold")
    try:
        minibatch = doc.get("minibatch", 1)
        if isinstance(minibatch, bool) or int(minibatch) != minibatch:
            raise ValueError("minibatch must be an integer")
        return Oracle(
            kind=kind,
            perturbation_std=float(doc.get("perturbation_std", 0.0)),
            direction=None if direction is None else tuple(float(v) for v in direction),
            minibatch=int(minibatch),
            gate_threshold=None if gate is None else float(gate),
        )
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{path}: {exc}") from exc


def oracle_from_json(text: str) -> Oracle:
    return oracle_from_dict(json.loads(text))


@dataclass
class GradientEstimate:
    """One realization of the update direction at ``point``.

    ``noise`` is ``grad(point) - direction`` and is computed on first access.
    """

    direction: np.ndarray
    point: np.ndarray
    model: CostModel = field(repr=False)
    _noise: np.ndarray | None = field(default=None, repr=False)

    @property
    def true_gradient(self) -> np.ndarray:
        return self.model.grad(self.point)

    @property
    def noise(self) -> np.ndarray:
        if self._noise is None:
            self._noise = self.true_gradient - self.direction
        return self._noise


def _direction(oracle: Oracle, model: CostModel, w: np.ndarray, rng) -> np.ndarray:
    if oracle.kind.uses_data:
        base = model.sample_grad(w, rng, oracle.minibatch)
    else:
        base = model.grad(w)
    if not oracle.kind.perturbed:
        return base
    if oracle.kind is OracleKind.TARGETED_STOCHASTIC:
        pert = oracle.perturbation_std * rng.standard_normal() * np.asarray(oracle.direction)
    else:
        pert = oracle.perturbation_std * rng.standard_normal(model.dimension)
    # The draw always happens so the stream advances identically with or without the gate.
    if oracle.gate_threshold is not None and base @ base >= oracle.gate_threshold:
        return base
    return base + pert


def estimate_gradient(oracle: Oracle, model: CostModel, w, rng) -> GradientEstimate:
    """Draw one update direction at ``w`` from ``rng``."""
    w = _check_point(model, w)
    return GradientEstimate(_direction(oracle, model, w, rng), w, model)


def sample_directions(oracle: Oracle, model: CostModel, w, n: int, rng) -> np.ndarray:
    """``n`` i.i.d. update directions at a fixed ``w``, shape (n, M).

    Vectorized counterpart of :func:`estimate_gradient` for diagnostics; it
    draws all data first and all perturbations second, so individual rows do
    not coincide with sequential single draws from the same seed.
    """
    w = _check_point(model, w)
    if oracle.kind.uses_data:
        base = model.sample_grad_batch(w, rng, n, oracle.minibatch)
    else:
        base = np.broadcast_to(model.grad(w), (n, model.dimension)).copy()
    if not oracle.kind.perturbed:
        return base
    if oracle.kind is OracleKind.TARGETED_STOCHASTIC:
        pert = oracle.perturbation_std * rng.standard_normal(n)[:, None] * np.asarray(oracle.direction)
    else:
        pert = oracle.perturbation_std * rng.standard_normal((n, model.dimension))
    if oracle.gate_threshold is not None:
        open_ = np.einsum("ij,ij->i", base, base) < oracle.gate_threshold
        pert = pert * open_[:, None]
    return base + pert


def sample_noise(oracle: Oracle, model: CostModel, w, n: int, rng) -> np.ndarray:
    """``n`` i.i.d. gradient-noise draws ``grad(w) - direction`` at a fixed ``w``."""
    w = _check_point(model, w)
    return model.grad(w)[None, :] - sample_directions(oracle, model, w, n, rng)


def noise_mean_check(oracle: Oracle, model: CostModel, w, n: int, rng) -> np.ndarray:
    """Sample mean of ``n`` noise draws at fixed ``w``."""
    if n < 1000:
        raise ValueError("noise_mean_check needs n >= 1000")
    return sample_noise(oracle, model, w, n, rng).mean(axis=0)
