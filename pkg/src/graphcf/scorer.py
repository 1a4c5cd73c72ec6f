"""Pair scorer: logistic regression over (factual error, counterfactual error, similarity).

A candidate ``G_j`` for query ``G_i`` is described by its reconstruction error
under the GAE of the query's class, its error under the other GAE, and its
similarity to the query. The scorer estimates the probability that the two
graphs belong to different classes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .gae import GaeModel, reconstruction_error
from .graph import Graph, pairwise_ged, similarity

FEATURE_NAMES = ("h_factual", "h_counterfactual", "sim")


class ScorerError(ValueError):
    pass


@dataclass(frozen=True)
class PairFeatures:
    h_factual: float
    h_counterfactual: float
    sim: float

    def __post_init__(self) -> None:
        vals = (self.h_factual, self.h_counterfactual, self.sim)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite pair feature {vals}")
        if not 0.0 < self.sim <= 1.0:
            raise ValueError(f"similarity must lie in (0, 1], got {self.sim}")

    def as_array(self) -> np.ndarray:
        return np.array([self.h_factual, self.h_counterfactual, self.sim])


@dataclass(frozen=True)
class PairExample:
    query_id: str
    candidate_id: str
    features: PairFeatures
    label: int


def extract_features(query: Graph, candidate: Graph, f0: GaeModel, f1: GaeModel, query_class: int) -> PairFeatures:
    models = (f0, f1)
    return PairFeatures(
        h_factual=reconstruction_error(models[query_class], candidate),
        h_counterfactual=reconstruction_error(models[1 - query_class], candidate),
        sim=similarity(query, candidate),
    )


def error_table(graphs: Sequence[Graph], f0: GaeModel, f1: GaeModel) -> np.ndarray:
    """Reconstruction errors, shape (len(graphs), 2): column c is under model c."""
    return np.array([[reconstruction_error(f0, g), reconstruction_error(f1, g)] for g in graphs]).reshape(-1, 2)


def build_pair_training_set(
    train_graphs: Sequence[Graph],
    all_graphs: Sequence[Graph],
    labels: Mapping[str, int],
    f0: GaeModel,
    f1: GaeModel,
    errors: Mapping[str, tuple[float, float]] | None = None,
) -> list[PairExample]:
    """One example per ordered (train, candidate) pair with distinct ids.

    Label is 1 iff the two graphs carry different classes. Output is sorted by
    (query id, candidate id) so fitting is reproducible.
    """
    for g in (*train_graphs, *all_graphs):
        if g.graph_id not in labels:
            raise KeyError(f"graph {g.graph_id!r} has no label")
    queries = sorted(train_graphs, key=lambda g: g.graph_id)
    cands = sorted(all_graphs, key=lambda g: g.graph_id)
    if errors is None:
        table = error_table(cands, f0, f1)
        errors = {g.graph_id: (table[i, 0], table[i, 1]) for i, g in enumerate(cands)}
    geds = pairwise_ged(queries, cands)
    out = []
    for i, q in enumerate(queries):
        yq = labels[q.graph_id]
        for j, c in enumerate(cands):
            if c.graph_id == q.graph_id:
                continue
            e = errors[c.graph_id]
            feats = PairFeatures(e[yq], e[1 - yq], 1.0 / (1.0 + geds[i, j]))
            out.append(PairExample(q.graph_id, c.graph_id, feats, int(labels[c.graph_id] != yq)))
    return out


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class PairScorer:
    """Class-balanced, L2-regularised logistic regression on standardised features.

    Objective: ``(1/N) sum_i s_i * logloss_i + lam/(2N) * ||w||^2`` with
    inverse-frequency sample weights ``s_i``; the bias is not penalised.
    """

    l2_lambda: float = 1.0
    coef: np.ndarray = field(default_factory=lambda: np.zeros(3))
    bias: float = 0.0
    mean: np.ndarray | None = None
    std: np.ndarray | None = None
    n_iter: int = 0

    @property
    def fitted(self) -> bool:
        return self.mean is not None

    @property
    def alpha(self) -> float:
        return float(self.coef[0])

    @property
    def beta(self) -> float:
        return float(self.coef[1])

    @property
    def gamma(self) -> float:
        return float(self.coef[2])

    def to_dict(self) -> dict:
        return {
            "l2_lambda": self.l2_lambda,
            "coef": self.coef.tolist(),
            "bias": self.bias,
            "mean": None if self.mean is None else self.mean.tolist(),
            "std": None if self.std is None else self.std.tolist(),
            "n_iter": self.n_iter,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PairScorer":
        return cls(
            l2_lambda=float(d["l2_lambda"]),
            coef=np.array(d["coef"], dtype=float),
            bias=float(d["bias"]),
            mean=None if d["mean"] is None else np.array(d["mean"], dtype=float),
            std=None if d["std"] is None else np.array(d["std"], dtype=float),
            n_iter=int(d.get("n_iter", 0)),
        )

    def standardize(self, x: np.ndarray) -> np.ndarray:
        if not self.fitted:
            raise ScorerError("scorer is not fitted")
        return (x - self.mean) / self.std

    def decision(self, x: np.ndarray) -> np.ndarray:
        return self.standardize(np.atleast_2d(x)) @ self.coef + self.bias

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return _sigmoid(self.decision(x))


def logistic_objective(
    w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray, s: np.ndarray, lam: float
) -> float:
    z = x @ w + b
    # log(1 + e^z) - y z
    loss = np.logaddexp(0.0, z) - y * z
    n = len(y)
    return float((s * loss).sum() / n + lam / (2 * n) * (w @ w))


def _balanced_weights(y: np.ndarray) -> np.ndarray:
    n = len(y)
    pos = y.sum()
    neg = n - pos
    return np.where(y == 1, n / (2.0 * pos), n / (2.0 * neg))


def fit_arrays(
    scorer: PairScorer,
    x: np.ndarray,
    y: np.ndarray,
    tol: float = 1e-6,
    max_iter: int = 10_000,
    standardize: bool = True,
) -> PairScorer:
    """Fit by damped Newton steps from zero; stops when the gradient norm < ``tol``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(np.unique(y)) < 2:
        raise ScorerError("pair set must contain both labels")
    if standardize:
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        if np.any(std <= 0):
            bad = [FEATURE_NAMES[i] if x.shape[1] == 3 else str(i) for i in np.flatnonzero(std <= 0)]
            raise ScorerError(f"degenerate (constant) feature(s): {bad}")
    else:
        mean = np.zeros(x.shape[1])
        std = np.ones(x.shape[1])
    xs = (x - mean) / std
    n, d = xs.shape
    s = _balanced_weights(y)
    lam = scorer.l2_lambda
    xb = np.column_stack([xs, np.ones(n)])
    theta = np.zeros(d + 1)
    reg = np.full(d + 1, lam / n)
    reg[-1] = 0.0

    def objective(th):
        return logistic_objective(th[:-1], th[-1], xs, y, s, lam)

    it = 0
    for it in range(1, max_iter + 1):
        p = _sigmoid(xb @ theta)
        grad = xb.T @ (s * (p - y)) / n + reg * theta
        if not np.all(np.isfinite(grad)):
            raise ScorerError("non-finite gradient while fitting the scorer")
        if np.linalg.norm(grad) < tol:
            break
        hess = (xb * (s * p * (1 - p))[:, None]).T @ xb / n + np.diag(reg)
        hess += 1e-12 * np.eye(d + 1)
        step = np.linalg.solve(hess, grad)
        f0 = objective(theta)
        t = 1.0
        while t > 1e-10:
            cand = theta - t * step
            if objective(cand) <= f0 - 1e-4 * t * (grad @ step):
                break
            t *= 0.5
        theta = theta - t * step
    if not math.isfinite(objective(theta)):
        raise ScorerError("non-finite loss after fitting the scorer")
    scorer.coef = theta[:-1].copy()
    scorer.bias = float(theta[-1])
    scorer.mean = mean
    scorer.std = std
    scorer.n_iter = it
    return scorer


def fit(scorer: PairScorer, pairs: Sequence[PairExample]) -> PairScorer:
    if not pairs:
        raise ScorerError("empty pair set")
    x = np.array([p.features.as_array() for p in pairs])
    y = np.array([p.label for p in pairs], dtype=float)
    return fit_arrays(scorer, x, y)


def score(scorer: PairScorer, f: PairFeatures) -> float:
    return float(scorer.predict_proba(f.as_array())[0])


@dataclass(frozen=True)
class RankedCandidate:
    graph_id: str
    score: float
    ged: float
    sim: float


def rank_arrays(
    scorer: PairScorer,
    query_id: str,
    cand_ids: Sequence[str],
    features: np.ndarray,
    geds: np.ndarray,
    k: int,
) -> list[RankedCandidate]:
    """Rank precomputed candidate features; the query id is skipped."""
    if k < 1:
        raise ValueError("k must be >= 1")
    keep = [i for i, cid in enumerate(cand_ids) if cid != query_id]
    if not keep:
        return []
    feats = features[keep]
    scores = scorer.predict_proba(feats)
    sims = feats[:, 2]
    ids = [cand_ids[i] for i in keep]
    order = sorted(range(len(keep)), key=lambda i: (-scores[i], -sims[i], ids[i]))
    return [
        RankedCandidate(ids[i], float(scores[i]), float(geds[keep[i]]), float(sims[i]))
        for i in order[: min(k, len(order))]
    ]


def rank_candidates(
    scorer: PairScorer,
    query: Graph,
    candidates: Sequence[Graph],
    f0: GaeModel,
    f1: GaeModel,
    query_class: int,
    k: int,
) -> list[RankedCandidate]:
    """Top-``k`` candidates by score, ties by higher similarity then graph id.

    An empty list means no candidate remained after excluding the query.
    """
    pool = [c for c in candidates if c.graph_id != query.graph_id]
    if not pool:
        return []
    table = error_table(pool, f0, f1)
    geds = pairwise_ged([query], pool)[0]
    feats = np.column_stack([table[:, query_class], table[:, 1 - query_class], 1.0 / (1.0 + geds)])
    return rank_arrays(scorer, query.graph_id, [c.graph_id for c in pool], feats, geds, k)
