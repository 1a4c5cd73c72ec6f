"""Temporal counterfactual explainer built on two class-specific GAEs.

The oracle is consulted only while fitting on the first snapshot. Later
snapshots are labelled by comparing reconstruction errors, and the GAEs are
adapted contrastively with the top-ranked counterfactual candidates.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .gae import GaeModel, GaeTrainConfig, reconstruction_error, train
from .graph import Graph, Snapshot, pairwise_ged
from .oracle import Oracle
from .scorer import (
    PairScorer,
    RankedCandidate,
    ScorerError,
    build_pair_training_set,
    error_table,
    fit,
    rank_arrays,
)

log = logging.getLogger(__name__)


class ExplainerError(RuntimeError):
    pass


@dataclass(frozen=True)
class AdaptConfig:
    # 1/5 of the initial epochs by default
    epochs: int = 10
    learning_rate: float = 1e-3
    rehearsal: bool = True
    warm_start_scorer: bool = False


@dataclass(frozen=True)
class Explanation:
    t: int
    query_id: str
    inferred_class: int
    ranked: tuple[RankedCandidate, ...]

    @property
    def failed(self) -> bool:
        return not self.ranked

    def to_record(self) -> dict:
        return {
            "t": self.t,
            "query_id": self.query_id,
            "inferred_class": self.inferred_class,
            "ranked": [
                {"graph_id": r.graph_id, "score": r.score, "ged": r.ged, "sim": r.sim} for r in self.ranked
            ],
        }


@dataclass
class OracleUsage:
    calls: int = 0
    pair_lookups: int = 0


class SnapshotView:
    """Per-snapshot cache of reconstruction errors and pairwise edit distances."""

    def __init__(self, graphs: Sequence[Graph], f0: GaeModel, f1: GaeModel):
        self.graphs = list(graphs)
        self.ids = [g.graph_id for g in self.graphs]
        self.index = {gid: i for i, gid in enumerate(self.ids)}
        self.errors = error_table(self.graphs, f0, f1)
        self._ged: np.ndarray | None = None

    @property
    def ged(self) -> np.ndarray:
        if self._ged is None:
            self._ged = pairwise_ged(self.graphs, self.graphs)
        return self._ged

    def inferred(self) -> np.ndarray:
        # ties go to class 0
        return (self.errors[:, 1] < self.errors[:, 0]).astype(int)

    def features(self, query_ged: np.ndarray, query_class: int) -> np.ndarray:
        return np.column_stack(
            [self.errors[:, query_class], self.errors[:, 1 - query_class], 1.0 / (1.0 + query_ged)]
        )


@dataclass
class Explainer:
    f0: GaeModel
    f1: GaeModel
    scorer: PairScorer = field(default_factory=PairScorer)
    k: int = 10
    train_config: GaeTrainConfig = field(default_factory=GaeTrainConfig)
    adapt_config: AdaptConfig = field(default_factory=AdaptConfig)
    opposite_pool_only: bool = False
    current_t: int = -1
    train_ids: tuple[str, ...] = ()
    labels: dict[str, int] = field(default_factory=dict)
    oracle_usage: OracleUsage = field(default_factory=OracleUsage)

    def __post_init__(self) -> None:
        if self.f0.class_tag != 0 or self.f1.class_tag != 1:
            raise ExplainerError("f0 must carry class_tag 0 and f1 class_tag 1")
        if self.k < 1:
            raise ExplainerError("k must be >= 1")

    @classmethod
    def create(
        cls,
        seed: int = 0,
        k: int = 10,
        train_config: GaeTrainConfig | None = None,
        adapt_config: AdaptConfig | None = None,
        l2_lambda: float = 1.0,
        opposite_pool_only: bool = False,
    ) -> "Explainer":
        ss = np.random.SeedSequence(seed)
        s0, s1 = (int(c.generate_state(1)[0]) for c in ss.spawn(2))
        cfg = train_config or GaeTrainConfig(seed=seed)
        return cls(
            GaeModel.init(0, seed=s0),
            GaeModel.init(1, seed=s1),
            PairScorer(l2_lambda=l2_lambda),
            k=k,
            train_config=cfg,
            adapt_config=adapt_config or AdaptConfig(epochs=max(1, cfg.epochs // 5), learning_rate=cfg.learning_rate),
            opposite_pool_only=opposite_pool_only,
        )

    @property
    def models(self) -> tuple[GaeModel, GaeModel]:
        return self.f0, self.f1

    # -- t0 ---------------------------------------------------------------------

    def fit_initial(self, snapshot0: Snapshot, oracle: Oracle, train_ids: Sequence[str]) -> "Explainer":
        if snapshot0.t != 0:
            raise ExplainerError(f"initial fit needs snapshot t=0, got t={snapshot0.t}")
        by_id = snapshot0.by_id()
        missing = [gid for gid in train_ids if gid not in by_id]
        if missing:
            raise ExplainerError(f"train ids not in snapshot 0: {missing[:3]}")
        before = oracle.read_counter()
        # one oracle call per graph, reused for every pair it takes part in
        labels = {g.graph_id: oracle.classify(g, 0) for g in snapshot0.graphs}
        train_graphs = [by_id[gid] for gid in sorted(train_ids)]
        for c in (0, 1):
            members = [g for g in train_graphs if labels[g.graph_id] == c]
            if not members:
                raise ExplainerError(f"class {c} has no training graphs")
            train(self.models[c], members, self.train_config, "minimize")
        pairs = build_pair_training_set(train_graphs, snapshot0.graphs, labels, self.f0, self.f1)
        fit(self.scorer, pairs)
        self.train_ids = tuple(sorted(train_ids))
        self.labels = labels
        self.current_t = 0
        self.oracle_usage = OracleUsage(
            calls=oracle.read_counter() - before,
            pair_lookups=len(train_graphs) * len(snapshot0),
        )
        return self

    # -- inference --------------------------------------------------------------

    def infer_class(self, g: Graph) -> int:
        e0 = reconstruction_error(self.f0, g)
        e1 = reconstruction_error(self.f1, g)
        return int(e1 < e0)

    def _require_fitted(self) -> None:
        if self.current_t < 0 or not self.scorer.fitted:
            raise ExplainerError("explainer is not fitted")

    def _explain_in(self, view: SnapshotView, qi: int, inferred: np.ndarray, t: int) -> Explanation:
        y = int(inferred[qi])
        qid = view.ids[qi]
        feats = view.features(view.ged[qi], y)
        ids = view.ids
        geds = view.ged[qi]
        if self.opposite_pool_only:
            keep = np.flatnonzero(inferred != y)
            feats, geds, ids = feats[keep], geds[keep], [ids[i] for i in keep]
        ranked = rank_arrays(self.scorer, qid, ids, feats, geds, self.k)
        return Explanation(t, qid, y, tuple(ranked))

    def explain(self, query: Graph, pool: Sequence[Graph], t: int | None = None) -> Explanation:
        """Rank ``pool`` for ``query``. Never calls the oracle."""
        self._require_fitted()
        t = self.current_t if t is None else t
        graphs = [query] + [g for g in pool if g.graph_id != query.graph_id]
        view = SnapshotView(graphs, self.f0, self.f1)
        exp = self._explain_in(view, 0, view.inferred(), t)
        if exp.failed:
            log.warning("no counterfactual candidate for %s at t=%d", query.graph_id, t)
        return exp

    def explain_many(self, queries: Sequence[str], snapshot: Snapshot) -> list[Explanation]:
        self._require_fitted()
        view = SnapshotView(snapshot.graphs, self.f0, self.f1)
        inferred = view.inferred()
        return [self._explain_in(view, view.index[q], inferred, snapshot.t) for q in queries]

    # -- online adaptation ------------------------------------------------------

    def adapt(self, snapshot: Snapshot) -> "Explainer":
        self._require_fitted()
        if snapshot.t != self.current_t + 1:
            raise ExplainerError(f"expected snapshot t={self.current_t + 1}, got t={snapshot.t}")
        view = SnapshotView(snapshot.graphs, self.f0, self.f1)
        inferred = view.inferred()
        by_id = snapshot.by_id()

        # targets[c]: candidates proposed as counterfactuals for queries inferred as 1-c
        targets: dict[int, set[str]] = {0: set(), 1: set()}
        for qi in range(len(view.ids)):
            exp = self._explain_in(view, qi, inferred, snapshot.t)
            targets[1 - exp.inferred_class].update(r.graph_id for r in exp.ranked)

        cfg = replace(self.train_config, epochs=self.adapt_config.epochs, learning_rate=self.adapt_config.learning_rate)
        for c in (0, 1):
            members = [view.ids[i] for i in np.flatnonzero(inferred == c)]
            if not members:
                log.warning("t=%d: no graph inferred as class %d, skipping its update", snapshot.t, c)
                continue
            model = self.models[c]
            pull = set(targets[c])
            if self.adapt_config.rehearsal:
                pull.update(members)
            if pull:
                train(model, [by_id[g] for g in sorted(pull)], cfg, "minimize")
            if targets[1 - c]:
                train(model, [by_id[g] for g in sorted(targets[1 - c])], cfg, "maximize")

        view = SnapshotView(snapshot.graphs, self.f0, self.f1)
        labels = dict(zip(view.ids, view.inferred().tolist()))
        train_graphs = [by_id[g] for g in self.train_ids if g in by_id]
        errors = {gid: tuple(view.errors[i]) for i, gid in enumerate(view.ids)}
        pairs = build_pair_training_set(train_graphs, snapshot.graphs, labels, self.f0, self.f1, errors)
        scorer = self.scorer if self.adapt_config.warm_start_scorer else PairScorer(l2_lambda=self.scorer.l2_lambda)
        try:
            self.scorer = fit(scorer, pairs)
        except ScorerError as exc:
            log.warning("t=%d: scorer refit skipped (%s); keeping previous weights", snapshot.t, exc)
        self.labels = labels
        self.current_t = snapshot.t
        return self

    # -- persistence ------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "f0": self.f0.to_dict(),
            "f1": self.f1.to_dict(),
            "scorer": self.scorer.to_dict(),
            "k": self.k,
            "current_t": self.current_t,
            "train_ids": list(self.train_ids),
            "opposite_pool_only": self.opposite_pool_only,
            "adapt": {
                "epochs": self.adapt_config.epochs,
                "learning_rate": self.adapt_config.learning_rate,
                "rehearsal": self.adapt_config.rehearsal,
                "warm_start_scorer": self.adapt_config.warm_start_scorer,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Explainer":
        f0 = GaeModel.from_dict(d["f0"])
        return cls(
            f0,
            GaeModel.from_dict(d["f1"]),
            PairScorer.from_dict(d["scorer"]),
            k=int(d["k"]),
            train_config=f0.config or GaeTrainConfig(),
            adapt_config=AdaptConfig(**d["adapt"]),
            opposite_pool_only=bool(d.get("opposite_pool_only", False)),
            current_t=int(d["current_t"]),
            train_ids=tuple(d["train_ids"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path: str | Path) -> "Explainer":
        return cls.from_dict(json.loads(Path(path).read_text()))


def baseline_dce(query: Graph, pool: Sequence[Graph], oracle: Oracle, t: int = 0) -> Explanation:
    """Most similar pool graph whose oracle class differs from the query's.

    Calls the oracle once for the query and once per candidate; ties on
    similarity go to the smaller graph id.
    """
    yq = oracle.classify(query, t)
    best: tuple[float, str] | None = None
    best_ged = 0.0
    cands = [c for c in pool if c.graph_id != query.graph_id]
    geds = pairwise_ged([query], cands)[0] if cands else np.zeros(0)
    for c, ged in zip(cands, geds):
        if oracle.classify(c, t) == yq:
            continue
        sim = 1.0 / (1.0 + ged)
        key = (-sim, c.graph_id)
        if best is None or key < best:
            best, best_ged = key, float(ged)
    if best is None:
        log.warning("baseline: no opposite-class graph for %s", query.graph_id)
        return Explanation(t, query.graph_id, yq, ())
    return Explanation(t, query.graph_id, yq, (RankedCandidate(best[1], 1.0, best_ged, -best[0]),))
