"""Graph autoencoder: two-layer GCN encoder, inner-product decoder, Adam.

Gradients are derived by hand; ``gradient_check`` compares them with
central finite differences.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .graph import Graph

EMBED_DIM = 8
FEATURE_DIM = 2


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class GaeTrainConfig:
    epochs: int = 50
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs <= 0:
            raise ValueError("epochs must be positive")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0

    @classmethod
    def like(cls, params: Sequence[np.ndarray]) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """In-place bias-corrected Adam update."""
    state.step += 1
    bc1 = 1.0 - beta1**state.step
    bc2 = 1.0 - beta2**state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


@dataclass
class GaeModel:
    W1: np.ndarray
    W2: np.ndarray
    class_tag: int = 0
    adam: AdamState = field(default=None)  # type: ignore[assignment]
    config: GaeTrainConfig | None = None

    def __post_init__(self) -> None:
        if self.adam is None:
            self.adam = AdamState.like(self.params)

    @classmethod
    def init(cls, class_tag: int, seed: int = 0, d_in: int = FEATURE_DIM, hidden: int = EMBED_DIM) -> "GaeModel":
        rng = np.random.default_rng(seed)
        return cls(glorot_uniform(rng, d_in, hidden), glorot_uniform(rng, hidden, hidden), class_tag)

    @classmethod
    def zeros(cls, class_tag: int = 0, d_in: int = FEATURE_DIM, hidden: int = EMBED_DIM) -> "GaeModel":
        return cls(np.zeros((d_in, hidden)), np.zeros((hidden, hidden)), class_tag)

    @property
    def params(self) -> list[np.ndarray]:
        return [self.W1, self.W2]

    def copy(self) -> "GaeModel":
        return GaeModel(
            self.W1.copy(),
            self.W2.copy(),
            self.class_tag,
            AdamState([m.copy() for m in self.adam.m], [v.copy() for v in self.adam.v], self.adam.step),
            self.config,
        )

    def to_dict(self) -> dict:
        return {
            "class_tag": self.class_tag,
            "W1": {"shape": list(self.W1.shape), "data": self.W1.ravel().tolist()},
            "W2": {"shape": list(self.W2.shape), "data": self.W2.ravel().tolist()},
            "adam": {
                "step": self.adam.step,
                "m": [m.ravel().tolist() for m in self.adam.m],
                "v": [v.ravel().tolist() for v in self.adam.v],
            },
            "config": asdict(self.config) if self.config else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GaeModel":
        W1 = np.array(d["W1"]["data"], dtype=float).reshape(d["W1"]["shape"])
        W2 = np.array(d["W2"]["data"], dtype=float).reshape(d["W2"]["shape"])
        shapes = [W1.shape, W2.shape]
        adam = AdamState(
            [np.array(m, dtype=float).reshape(s) for m, s in zip(d["adam"]["m"], shapes)],
            [np.array(v, dtype=float).reshape(s) for v, s in zip(d["adam"]["v"], shapes)],
            int(d["adam"]["step"]),
        )
        cfg = GaeTrainConfig(**d["config"]) if d.get("config") else None
        return cls(W1, W2, int(d["class_tag"]), adam, cfg)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path: str | Path) -> "GaeModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def node_features(g: Graph) -> np.ndarray:
    """Constant column plus weighted degree scaled by the maximum degree."""
    deg = g.weights.sum(axis=1)
    top = deg.max()
    scaled = deg / top if top > 0 else np.zeros_like(deg)
    return np.column_stack([np.ones(g.num_nodes), scaled])


def normalized_adjacency(g: Graph) -> np.ndarray:
    a = g.weights + np.eye(g.num_nodes)
    d = 1.0 / np.sqrt(a.sum(axis=1))
    return a * d[:, None] * d[None, :]


def _forward(W1, W2, a_hat, x):
    ax = a_hat @ x
    h1 = ax @ W1
    r = np.maximum(h1, 0.0)
    ar = a_hat @ r
    z = ar @ W2
    return ax, h1, ar, z


def encode(m: GaeModel, g: Graph) -> np.ndarray:
    a_hat = normalized_adjacency(g)
    return _forward(m.W1, m.W2, a_hat, node_features(g))[-1]


def _bce_mean(logits: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean BCE over ordered off-diagonal pairs and its gradient w.r.t. logits."""
    n = logits.shape[0]
    if n < 2:
        return 0.0, np.zeros_like(logits)
    off = ~np.eye(n, dtype=bool)
    # softplus(s) - y*s is BCE(sigmoid(s), y) in stable form
    per_pair = np.logaddexp(0.0, logits) - target * logits
    count = n * (n - 1)
    loss = float(per_pair[off].sum() / count)
    grad = np.where(off, (_sigmoid(logits) - target) / count, 0.0)
    return loss, grad


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def reconstruction_error(m: GaeModel, g: Graph) -> float:
    z = encode(m, g)
    return _bce_mean(z @ z.T, g.adjacency)[0]


def loss_and_grads(m: GaeModel, g: Graph, W1=None, W2=None) -> tuple[float, list[np.ndarray]]:
    W1 = m.W1 if W1 is None else W1
    W2 = m.W2 if W2 is None else W2
    a_hat = normalized_adjacency(g)
    ax, h1, ar, z = _forward(W1, W2, a_hat, node_features(g))
    loss, d_s = _bce_mean(z @ z.T, g.adjacency)
    # S = Z Z^T with symmetric dS
    d_z = (d_s + d_s.T) @ z
    g_w2 = ar.T @ d_z
    d_r = a_hat.T @ (d_z @ W2.T)
    d_h1 = d_r * (h1 > 0)
    g_w1 = ax.T @ d_h1
    return loss, [g_w1, g_w2]


def _stack(graphs: Sequence[Graph]):
    a_hat = np.stack([normalized_adjacency(g) for g in graphs])
    x = np.stack([node_features(g) for g in graphs])
    target = np.stack([g.adjacency for g in graphs])
    return a_hat, x, target


def batch_loss_and_grads(m: GaeModel, graphs: Sequence[Graph], _cache=None) -> tuple[float, list[np.ndarray]]:
    """Mean loss over graphs and its gradient; same-size graphs share one batched pass."""
    groups: dict[int, list[Graph]] = {}
    for g in graphs:
        groups.setdefault(g.num_nodes, []).append(g)
    total = 0.0
    g_w1 = np.zeros_like(m.W1)
    g_w2 = np.zeros_like(m.W2)
    for n, members in groups.items():
        if n < 2:
            continue
        if _cache is not None and n in _cache:
            a_hat, x, target = _cache[n]
        else:
            a_hat, x, target = _stack(members)
            if _cache is not None:
                _cache[n] = (a_hat, x, target)
        ax = a_hat @ x
        h1 = ax @ m.W1
        r = np.maximum(h1, 0.0)
        ar = a_hat @ r
        z = ar @ m.W2
        logits = z @ np.swapaxes(z, 1, 2)
        off = ~np.eye(n, dtype=bool)
        count = n * (n - 1)
        per_pair = np.logaddexp(0.0, logits) - target * logits
        total += float(per_pair[:, off].sum()) / count
        d_s = np.where(off, (_sigmoid(logits) - target) / count, 0.0)
        d_z = (d_s + np.swapaxes(d_s, 1, 2)) @ z
        g_w2 += np.einsum("bni,bnj->ij", ar, d_z)
        d_r = np.swapaxes(a_hat, 1, 2) @ (d_z @ m.W2.T)
        d_h1 = d_r * (h1 > 0)
        g_w1 += np.einsum("bni,bnj->ij", ax, d_h1)
    k = len(graphs)
    return total / k, [g_w1 / k, g_w2 / k]


def train(
    m: GaeModel,
    graphs: Sequence[Graph],
    cfg: GaeTrainConfig,
    direction: str = "minimize",
) -> GaeModel:
    """Full-batch Adam on the mean reconstruction error; updates ``m`` in place.

    ``direction="maximize"`` ascends the loss with each parameter gradient
    clipped to L2 norm 1.
    """
    if not graphs:
        raise ValueError("train needs at least one graph")
    if direction not in ("minimize", "maximize"):
        raise ValueError(f"unknown direction {direction!r}")
    cache: dict = {}
    for epoch in range(cfg.epochs):
        loss, grads = batch_loss_and_grads(m, graphs, cache)
        if not math.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads):
            raise TrainingError(f"non-finite loss or gradient at epoch {epoch}")
        if direction == "maximize":
            clipped = []
            for g in grads:
                norm = float(np.linalg.norm(g))
                clipped.append(-(g / norm if norm > 1.0 else g))
            grads = clipped
        adam_step(m.params, grads, m.adam, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    m.config = cfg
    return m


def finite_difference_grads(m: GaeModel, g: Graph, eps: float = 1e-5) -> list[np.ndarray]:
    out = []
    for idx in range(2):
        base = [m.W1.copy(), m.W2.copy()]
        fd = np.zeros_like(base[idx])
        for k in np.ndindex(fd.shape):
            plus = [p.copy() for p in base]
            minus = [p.copy() for p in base]
            plus[idx][k] += eps
            minus[idx][k] -= eps
            lp = loss_and_grads(m, g, *plus)[0]
            lm = loss_and_grads(m, g, *minus)[0]
            fd[k] = (lp - lm) / (2 * eps)
        out.append(fd)
    return out


def gradient_check(m: GaeModel, g: Graph, eps: float = 1e-5, grad_fn=None) -> float:
    """Largest relative error between analytic and finite-difference gradients."""
    analytic = (grad_fn or loss_and_grads)(m, g)[1]
    numeric = finite_difference_grads(m, g, eps)
    worst = 0.0
    for a, f in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(f)), 1e-8)
        worst = max(worst, float(np.max(np.abs(a - f) / denom)))
    return worst
