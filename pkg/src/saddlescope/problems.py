"""Cost models: analytic quadratics and the two-layer logistic example.

Every model works on arrays whose trailing axis is the parameter vector, so
``grad(W)`` with ``W.shape == (n, M)`` returns ``(n, M)`` and ``hessian(W)``
returns ``(n, M, M)``. The module-level ``eval_*`` functions are the checked,
single-point entry points.

Note on symbols: the logistic ridge weight is called ``reg`` here and the
Hessian-Lipschitz constant is ``lipschitz_hess``. Both are written with the
same Greek letter in the literature this package follows.
"""
from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

DEFAULT_QUADRATURE_ORDER = 64
CERTIFICATE_RADIUS = 3.0


def sigmoid(x):
    """Numerically stable logistic function."""
    x = np.asarray(x, dtype=float)
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _check_point(model: "CostModel", w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (model.dimension,):
        raise ValueError(
            f"expected a vector of length {model.dimension}, got shape {w.shape}"
        )
    return w


class CostModel:
    """Base class for a smooth risk J with hand-coded derivatives.

    Subclasses set ``dimension``, ``lipschitz_grad`` (delta),
    ``lipschitz_hess`` (rho) and ``lower_bound`` (None when unknown), and
    implement the batched ``cost``/``grad``/``hessian`` methods together with
    ``sample_grad`` for the streaming gradient.
    """

    dimension: int
    lipschitz_grad: float
    lipschitz_hess: float
    lower_bound: float | None

    def cost(self, W):
        raise NotImplementedError

    def grad(self, W):
        raise NotImplementedError

    def hessian(self, W):
        raise NotImplementedError

    def sample_grad(self, w, rng: np.random.Generator, minibatch: int = 1):
        """Average of ``minibatch`` instantaneous gradients at ``w``."""
        raise NotImplementedError

    def sample_grad_batch(self, w, rng: np.random.Generator, n: int, minibatch: int = 1):
        """``n`` independent minibatch gradients at one point, shape (n, M)."""
        raise NotImplementedError

    def taylor_model(self, anchor):
        """Gradient map of the second-order expansion of J around ``anchor``."""
        anchor = np.asarray(anchor, dtype=float).copy()
        g0 = self.grad(anchor)
        H0 = self.hessian(anchor)
        return lambda w: g0 + H0 @ (w - anchor)

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True)
class QuadraticModel(CostModel):
    """J(w) = 1/2 sum_m curvature_m w_m^2 with a constant diagonal Hessian.

    The instantaneous gradient is ``curvature * w + grad_noise_std * xi`` with
    standard normal ``xi``: additive data noise whose covariance does not
    depend on ``w``.
    """

    curvature: tuple[float, ...]
    grad_noise_std: float = 0.0

    def __post_init__(self):
        c = tuple(float(v) for v in self.curvature)
        if not c:
            raise ValueError("curvature must be non-empty")
        if not all(np.isfinite(c)):
            raise ValueError("curvature must be finite")
        if self.grad_noise_std < 0:
            raise ValueError("grad_noise_std must be nonnegative")
        object.__setattr__(self, "curvature", c)

    @property
    def dimension(self) -> int:
        return len(self.curvature)

    @property
    def lipschitz_grad(self) -> float:
        return float(np.max(np.abs(self.curvature)))

    @property
    def lipschitz_hess(self) -> float:
        return 0.0

    @property
    def lower_bound(self) -> float | None:
        return 0.0 if min(self.curvature) >= 0 else None

    @property
    def has_strict_saddle(self) -> bool:
        return min(self.curvature) < 0

    @property
    def _c(self) -> np.ndarray:
        return np.asarray(self.curvature)

    def cost(self, W):
        W = np.asarray(W, dtype=float)
        return 0.5 * np.sum(self._c * W * W, axis=-1)

    def grad(self, W):
        return self._c * np.asarray(W, dtype=float)

    def hessian(self, W):
        W = np.asarray(W, dtype=float)
        return np.broadcast_to(np.diag(self._c), W.shape[:-1] + (self.dimension,) * 2).copy()

    def taylor_model(self, anchor):
        # A quadratic is its own second-order expansion.
        return self.grad

    def sample_grad(self, w, rng, minibatch=1):
        xi = rng.standard_normal((minibatch, self.dimension))
        return self.grad(w) + self.grad_noise_std * xi.mean(axis=0)

    def sample_grad_batch(self, w, rng, n, minibatch=1):
        xi = rng.standard_normal((n, minibatch, self.dimension)).mean(axis=1)
        return self.grad(w)[None, :] + self.grad_noise_std * xi

    def to_dict(self):
        return {
            "kind": "quadratic",
            "curvature": list(self.curvature),
            "grad_noise_std": self.grad_noise_std,
        }


@dataclass(frozen=True)
class DataSample:
    label: float
    feature: float


@functools.lru_cache(maxsize=32)
def _hermite_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.hermite_e.hermegauss(order)
    return nodes, weights / weights.sum()


@dataclass(frozen=True)
class TwoLayerLogisticModel(CostModel):
    """Two-layer network reduced to scalar weights w = (w1, W2).

    Per-sample loss ``log(1 + exp(-gamma w1 W2 h)) + reg/2 (w1^2 + W2^2)``.
    Data law: gamma uniform on {-1, +1} and ``h = gamma*label_mean +
    feature_noise_std*z``, so ``gamma*h ~ N(label_mean, feature_noise_std^2)``
    and the risk is a one-dimensional Gaussian expectation evaluated by
    Gauss-Hermite quadrature.
    """

    reg: float = 0.1
    label_mean: float = 1.0
    feature_noise_std: float = 0.5
    quadrature_order: int = DEFAULT_QUADRATURE_ORDER

    def __post_init__(self):
        if self.reg < 0:
            raise ValueError("reg must be nonnegative")
        if self.feature_noise_std < 0:
            raise ValueError("feature_noise_std must be nonnegative")
        if self.quadrature_order < 8:
            raise ValueError("quadrature_order must be at least 8")

    dimension = 2

    @property
    def lower_bound(self) -> float:
        # log(1 + e^x) > 0 and the ridge term is nonnegative.
        return 0.0

    @property
    def lipschitz_grad(self) -> float:
        return _logistic_certificates(self.reg, self.label_mean, self.feature_noise_std)[0]

    @property
    def lipschitz_hess(self) -> float:
        return _logistic_certificates(self.reg, self.label_mean, self.feature_noise_std)[1]

    def _margins(self, order=None):
        nodes, weights = _hermite_rule(order or self.quadrature_order)
        return self.label_mean + self.feature_noise_std * nodes, weights

    def _link_derivatives(self, p, order=None):
        """f(p), f'(p), f''(p) for f(p) = E log(1 + exp(-p z))."""
        z, wq = self._margins(order)
        pz = np.asarray(p, dtype=float)[..., None] * z
        f0 = np.logaddexp(0.0, -pz) @ wq
        s = sigmoid(-pz)
        f1 = (-z * s) @ wq
        f2 = (z * z * s * (1.0 - s)) @ wq
        return f0, f1, f2

    def cost(self, W, order=None):
        W = np.asarray(W, dtype=float)
        p = W[..., 0] * W[..., 1]
        f0, _, _ = self._link_derivatives(p, order)
        return f0 + 0.5 * self.reg * np.sum(W * W, axis=-1)

    def grad(self, W):
        W = np.asarray(W, dtype=float)
        p = W[..., 0] * W[..., 1]
        _, f1, _ = self._link_derivatives(p)
        return f1[..., None] * W[..., ::-1] + self.reg * W

    def hessian(self, W):
        W = np.asarray(W, dtype=float)
        p = W[..., 0] * W[..., 1]
        _, f1, f2 = self._link_derivatives(p)
        q = W[..., ::-1]
        H = f2[..., None, None] * q[..., :, None] * q[..., None, :]
        H[..., 0, 1] += f1
        H[..., 1, 0] += f1
        H[..., 0, 0] += self.reg
        H[..., 1, 1] += self.reg
        return H

    def draw(self, rng, shape):
        """Raw (labels, features) arrays; labels drawn first, then features."""
        labels = 2.0 * rng.integers(0, 2, size=shape) - 1.0
        features = labels * self.label_mean + self.feature_noise_std * rng.standard_normal(shape)
        return labels, features

    def _sample_grads(self, w, labels, features):
        gh = labels * features
        u = gh * w[0] * w[1]
        coef = -sigmoid(-u) * gh
        return coef[..., None] * w[::-1] + self.reg * w

    def sample_grad(self, w, rng, minibatch=1):
        w = np.asarray(w, dtype=float)
        if minibatch == 1:
            # scalar path: same draw order (label, then feature), far less overhead
            gam = 2.0 * float(rng.integers(0, 2)) - 1.0
            h = gam * self.label_mean + self.feature_noise_std * float(rng.standard_normal())
            gh = gam * h
            w1, w2 = float(w[0]), float(w[1])
            u = gh * w1 * w2
            if u > 0:
                e = math.exp(-u)
                sig = e / (1.0 + e)
            else:
                sig = 1.0 / (1.0 + math.exp(u))
            coef = -sig * gh
            return np.array((coef * w2 + self.reg * w1, coef * w1 + self.reg * w2))
        labels, features = self.draw(rng, minibatch)
        return self._sample_grads(w, labels, features).mean(axis=0)

    def sample_grad_batch(self, w, rng, n, minibatch=1):
        w = np.asarray(w, dtype=float)
        labels, features = self.draw(rng, (n, minibatch))
        return self._sample_grads(w, labels, features).mean(axis=1)

    def to_dict(self):
        return {
            "kind": "two_layer_logistic",
            "reg": self.reg,
            "label_mean": self.label_mean,
            "feature_noise_std": self.feature_noise_std,
        }


@functools.lru_cache(maxsize=16)
def _logistic_certificates(reg, label_mean, feature_noise_std):
    """Numerical (delta, rho) certificates over the ball of CERTIFICATE_RADIUS.

    delta bounds the Hessian spectral norm, rho bounds the directional third
    derivative; both are grid maxima inflated by 10%.
    """
    model = TwoLayerLogisticModel(reg, label_mean, feature_noise_std)
    g = np.linspace(-CERTIFICATE_RADIUS, CERTIFICATE_RADIUS, 121)
    X, Y = np.meshgrid(g, g)
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    pts = pts[np.linalg.norm(pts, axis=1) <= CERTIFICATE_RADIUS + 1e-12]
    delta = np.abs(np.linalg.eigvalsh(model.hessian(pts))).max()

    angles = np.linspace(0.0, np.pi, 24, endpoint=False)
    h = 1e-4
    rho = 0.0
    for a in angles:
        u = np.array([np.cos(a), np.sin(a)])
        dH = (model.hessian(pts + h * u) - model.hessian(pts - h * u)) / (2 * h)
        rho = max(rho, np.linalg.norm(dH, ord=2, axis=(1, 2)).max())
    return 1.1 * float(delta), 1.1 * float(rho)


def eval_cost(model: CostModel, w) -> float:
    return float(model.cost(_check_point(model, w)))


def eval_grad(model: CostModel, w) -> np.ndarray:
    return np.asarray(model.grad(_check_point(model, w)), dtype=float)


def eval_hessian(model: CostModel, w) -> np.ndarray:
    return np.asarray(model.hessian(_check_point(model, w)), dtype=float)


def sample_data(spec: TwoLayerLogisticModel, count: int, rng) -> list[DataSample]:
    if count < 1:
        raise ValueError("count must be at least 1")
    labels, features = spec.draw(rng, count)
    return [DataSample(float(g), float(h)) for g, h in zip(labels, features)]


def loss_grad(spec: TwoLayerLogisticModel, w, sample: DataSample) -> np.ndarray:
    """Gradient of the per-sample loss at ``w`` for one observation."""
    w = _check_point(spec, w)
    return spec._sample_grads(w, np.float64(sample.label), np.float64(sample.feature))


def expected_risk_oracle(spec: TwoLayerLogisticModel, w, order: int = DEFAULT_QUADRATURE_ORDER) -> float:
    if order < 8:
        raise ValueError("quadrature order must be at least 8")
    return float(spec.cost(_check_point(spec, w), order=order))


_MODEL_KEYS = {
    "quadratic": {"kind", "curvature", "grad_noise_std"},
    "two_layer_logistic": {"kind", "reg", "label_mean", "feature_noise_std"},
}


def model_from_dict(doc: dict[str, Any], path: str = "model") -> CostModel:
    """Build a model from its JSON document, rejecting unknown fields."""
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: expected an object")
    kind = doc.get("kind")
    if kind not in _MODEL_KEYS:
        raise ValueError(f"{path}.kind: unknown model kind {kind!r}")
    extra = set(doc) - _MODEL_KEYS[kind]
    if extra:
        raise ValueError(f"{path}.{sorted(extra)[0]}: unknown field for {kind} model")
    try:
        if kind == "quadratic":
            if "curvature" not in doc:
                raise ValueError("missing curvature")
            return QuadraticModel(
                tuple(doc["curvature"]), float(doc.get("grad_noise_std", 0.0))
            )
        return TwoLayerLogisticModel(
            reg=float(doc.get("reg", 0.1)),
            label_mean=float(doc.get("label_mean", 1.0)),
            feature_noise_std=float(doc.get("feature_noise_std", 0.5)),
        )
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{path}: {exc}") from exc


def model_to_json(model: CostModel) -> str:
    return json.dumps(model.to_dict(), sort_keys=True)


def model_from_json(text: str) -> CostModel:
    return model_from_dict(json.loads(text))
