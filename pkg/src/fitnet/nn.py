"""Dense layers, residual blocks, softmax cross-entropy and Adam in plain numpy.

Every layer exposes ``forward(x) -> (y, cache)`` and
``backward(dy, cache) -> (dx, grads)`` with hand-derived gradients. Inputs
may be a single vector or a batch of row vectors.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

LOG_CLAMP = 1e-12


class ShapeError(ValueError):
    pass


def he_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


def lecun_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    limit = np.sqrt(3.0 / fan_in)
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


class DenseLayer:
    """``y = act(x W^T + b)`` with ``act`` either relu or identity."""

    def __init__(self, weight, bias, activation: str = "relu"):
        self.weight = np.asarray(weight, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)
        if activation not in ("relu", "identity"):
            raise ValueError(f"unknown activation {activation!r}")
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ShapeError(f"weight {self.weight.shape} and bias {self.bias.shape} disagree")
        self.activation = activation

    @classmethod
    def initialize(cls, in_dim: int, out_dim: int, activation: str, rng: np.random.Generator):
        init = he_uniform if activation == "relu" else lecun_uniform
        return cls(init(rng, out_dim, in_dim), np.zeros(out_dim), activation)

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]

    def parameters(self) -> dict[str, np.ndarray]:
        return {"weight": self.weight, "bias": self.bias}

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.in_dim:
            raise ShapeError(f"expected input width {self.in_dim}, got {x.shape[-1]}")
        z = x @ self.weight.T
        z += self.bias
        y = np.maximum(z, 0.0) if self.activation == "relu" else z
        return y, (x, z)

    def backward(self, dy, cache):
        x, z = cache
        dz = dy * (z > 0) if self.activation == "relu" else dy
        if x.ndim == 1:
            dw = np.outer(dz, x)
            db = dz.copy()
        else:
            dw = dz.T @ x
            db = dz.sum(axis=0)
        dx = dz @ self.weight
        return dx, {"weight": dw, "bias": db}


class ResidualBlock:
    """``relu(inner2(relu(inner1(x))) + proj(x))``.

    ``inner2`` is linear; the skip path is the identity when widths match and
    a linear projection otherwise.
    """

    def __init__(self, inner1: DenseLayer, inner2: DenseLayer, projection: DenseLayer | None = None):
        if inner1.activation != "relu" or inner2.activation != "identity":
            raise ValueError("inner1 must be relu and inner2 identity")
        if inner2.in_dim != inner1.out_dim:
            raise ShapeError("inner layers do not chain")
        if (projection is None) != (inner1.in_dim == inner2.out_dim):
            raise ShapeError("projection required exactly when input and output widths differ")
        if projection is not None:
            if projection.activation != "identity":
                raise ValueError("projection must be linear")
            if (projection.in_dim, projection.out_dim) != (inner1.in_dim, inner2.out_dim):
                raise ShapeError("projection shape does not match block")
        self.inner1 = inner1
        self.inner2 = inner2
        self.projection = projection

    @classmethod
    def initialize(cls, in_dim: int, out_dim: int, rng: np.random.Generator, hidden: int | None = None):
        hidden = out_dim if hidden is None else hidden
        inner1 = DenseLayer.initialize(in_dim, hidden, "relu", rng)
        inner2 = DenseLayer.initialize(hidden, out_dim, "identity", rng)
        proj = DenseLayer.initialize(in_dim, out_dim, "identity", rng) if in_dim != out_dim else None
        return cls(inner1, inner2, proj)

    @property
    def in_dim(self) -> int:
        return self.inner1.in_dim

    @property
    def out_dim(self) -> int:
        return self.inner2.out_dim

    def _layers(self):
        layers = {"inner1": self.inner1, "inner2": self.inner2}
        if self.projection is not None:
            layers["projection"] = self.projection
        return layers

    def parameters(self) -> dict[str, np.ndarray]:
        return {f"{ln}.{pn}": p for ln, layer in self._layers().items()
                for pn, p in layer.parameters().items()}

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.in_dim:
            raise ShapeError(f"expected input width {self.in_dim}, got {x.shape[-1]}")
        h, c1 = self.inner1.forward(x)
        r, c2 = self.inner2.forward(h)
        if self.projection is not None:
            s, cp = self.projection.forward(x)
        else:
            s, cp = x, None
        z = r + s
        return np.maximum(z, 0.0), (c1, c2, cp, z)

    def backward(self, dy, cache):
        c1, c2, cp, z = cache
        dz = dy * (z > 0)
        dh, g2 = self.inner2.backward(dz, c2)
        dx, g1 = self.inner1.backward(dh, c1)
        grads = {f"inner1.{k}": v for k, v in g1.items()}
        grads.update({f"inner2.{k}": v for k, v in g2.items()})
        if self.projection is not None:
            dxs, gp = self.projection.backward(dz, cp)
            dx = dx + dxs
            grads.update({f"projection.{k}": v for k, v in gp.items()})
        else:
            dx = dx + dz
        return dx, grads


class Stack:
    """Residual blocks applied in sequence."""

    def __init__(self, blocks: list[ResidualBlock]):
        for a, b in zip(blocks, blocks[1:]):
            if a.out_dim != b.in_dim:
                raise ShapeError("blocks do not chain")
        self.blocks = list(blocks)

    @classmethod
    def initialize(cls, widths, rng: np.random.Generator):
        widths = list(widths)
        return cls([ResidualBlock.initialize(a, b, rng) for a, b in zip(widths, widths[1:])])

    @property
    def in_dim(self) -> int:
        return self.blocks[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.blocks[-1].out_dim

    def parameters(self) -> dict[str, np.ndarray]:
        return {f"{i}.{k}": v for i, b in enumerate(self.blocks) for k, v in b.parameters().items()}

    def forward(self, x):
        caches = []
        for b in self.blocks:
            x, c = b.forward(x)
            caches.append(c)
        return x, caches

    def backward(self, dy, caches):
        grads = {}
        for i in reversed(range(len(self.blocks))):
            dy, g = self.blocks[i].backward(dy, caches[i])
            grads.update({f"{i}.{k}": v for k, v in g.items()})
        return dy, grads


def softmax(logits):
    logits = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(logits)):
        raise ValueError("softmax input contains non-finite values")
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy_loss(probs, label_index: int) -> float:
    p = float(np.asarray(probs)[label_index])
    return -float(np.log(max(p, LOG_CLAMP)))


def softmax_ce_backward(logits, label_index: int) -> np.ndarray:
    grad = softmax(logits)
    grad[label_index] -= 1.0
    return grad


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean loss over a batch plus its gradient w.r.t. the logits.

    Returns ``(loss, dlogits, n_saturated)`` where ``n_saturated`` counts
    rows whose true-class probability hit the log clamp.
    """
    probs = softmax(logits)
    n = logits.shape[0]
    rows = np.arange(n)
    p_true = probs[rows, labels]
    saturated = int(np.count_nonzero(p_true < LOG_CLAMP))
    loss = float(-np.log(np.maximum(p_true, LOG_CLAMP)).mean())
    grad = probs
    grad[rows, labels] -= 1.0
    return loss, grad / n, saturated


class Adam:
    """Adam with bias correction. Updates parameter arrays in place."""

    def __init__(self, learning_rate: float = 0.01, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: Mapping[str, np.ndarray], grads: Mapping[str, np.ndarray]) -> None:
        for name, g in grads.items():
            if name not in params:
                raise KeyError(f"gradient for unknown parameter {name}")
            if g.shape != params[name].shape:
                raise ShapeError(f"gradient shape {g.shape} != parameter shape for {name}")
            # a finite sum rules out inf/nan entries without a full elementwise pass
            if not np.isfinite(g.sum()) and not np.all(np.isfinite(g)):
                raise FloatingPointError(f"non-finite gradient in parameter block {name}")
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1, c2 = 1 - b1 ** self.t, 1 - b2 ** self.t
        for name, g in grads.items():
            p = params[name]
            if name not in self.m:
                self.m[name] = np.zeros_like(p)
                self.v[name] = np.zeros_like(p)
            m, v = self.m[name], self.v[name]
            m *= b1
            m += (1 - b1) * g
            tmp = np.multiply(g, g)
            tmp *= 1 - b2
            v *= b2
            v += tmp
            # p -= lr * (m / c1) / (sqrt(v / c2) + eps)
            np.divide(v, c2, out=tmp)
            np.sqrt(tmp, out=tmp)
            tmp += self.eps
            np.divide(m, tmp, out=tmp)
            tmp *= self.learning_rate / c1
            p -= tmp


@dataclass
class GradCheckReport:
    tolerance: float
    n_checked: int = 0
    max_rel_error: float = 0.0
    worst: list[tuple[str, tuple, float, float, float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance

    @property
    def failures(self) -> list:
        return [w for w in self.worst if w[4] >= self.tolerance]


def relative_error(a: float, b: float, floor: float = 1e-8) -> float:
    return abs(a - b) / max(abs(a), abs(b), floor)


def finite_difference_check(
    loss_and_grads: Callable[[], tuple[float, Mapping[str, np.ndarray]]],
    params: Mapping[str, np.ndarray],
    tolerance: float,
    n_coords: int = 100,
    h: float = 1e-5,
    seed: int = 0,
    n_worst: int = 5,
) -> GradCheckReport:
    """Compare analytic gradients with central differences.

    ``loss_and_grads`` evaluates the loss at the current contents of
    ``params`` (which are perturbed in place and restored). Every parameter
    block contributes at least one coordinate; the rest are sampled
    uniformly until ``n_coords`` are checked (or all, when fewer exist).
    """
    report = GradCheckReport(tolerance)
    names = [n for n, p in params.items() if p.size > 0]
    if not names:
        return report
    _, grads = loss_and_grads()
    grads = {k: np.array(v, copy=True) for k, v in grads.items()}

    rng = np.random.default_rng(seed)
    sizes = np.array([params[n].size for n in names])
    total = int(sizes.sum())
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    if total <= n_coords:
        flat = np.arange(total)
    else:
        firsts = np.array([offsets[i] + rng.integers(sizes[i]) for i in range(len(names))])
        rest = rng.choice(total, size=max(n_coords - len(names), 0), replace=False)
        flat = np.unique(np.concatenate([firsts, rest]))

    results = []
    for f in flat:
        i = int(np.searchsorted(offsets, f, side="right") - 1)
        name = names[i]
        p = params[name]
        idx = np.unravel_index(int(f - offsets[i]), p.shape)
        orig = p[idx]
        p[idx] = orig + h
        lp, _ = loss_and_grads()
        p[idx] = orig - h
        lm, _ = loss_and_grads()
        p[idx] = orig
        numeric = (lp - lm) / (2 * h)
        analytic = float(grads[name][idx]) if name in grads else 0.0
        results.append((name, tuple(int(j) for j in idx), analytic, numeric,
                        relative_error(analytic, numeric)))
    results.sort(key=lambda r: -r[4])
    report.n_checked = len(results)
    report.max_rel_error = results[0][4]
    report.worst = results[:n_worst]
    return report
