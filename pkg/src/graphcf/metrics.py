"""Per-query evaluation metrics and the per-snapshot metrics record."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Mapping, Sequence

import numpy as np

from .explainer import Explanation
from .graph import Graph, graph_edit_distance


@dataclass
class MetricsRecord:
    dataset: str
    fold: int
    t: int
    runtime_s: float
    correctness_at_1: float
    correctness_at_k: float
    sparsity_at_1: float
    sparsity_at_k: float
    ged_at_1: float
    ged_at_k: float
    oracle_calls: int
    oracle_calls_cached: int = 0
    num_queries: int = 0
    num_failed: int = 0
    drift_ks: float = math.nan
    drift_p: float = math.nan
    drifted: int = 0

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


# column order of the aggregate table
TABLE_COLUMNS = (
    "runtime_s",
    "correctness_at_1",
    "correctness_at_k",
    "sparsity_at_1",
    "sparsity_at_k",
    "ged_at_1",
    "ged_at_k",
    "oracle_calls",
)


def correctness_at(expl: Explanation, truth: Mapping[str, int], j: int) -> int:
    """1 iff one of the first ``j`` candidates has a true class unlike the query's."""
    if j < 1:
        raise ValueError("j must be >= 1")
    yq = truth[expl.query_id]
    return int(any(truth[r.graph_id] != yq for r in expl.ranked[:j]))


def sparsity(query: Graph, candidate: Graph) -> float:
    size = query.num_nodes + query.num_edges
    if size == 0:
        raise ValueError("sparsity is undefined for an empty query")
    return graph_edit_distance(query, candidate).ged / size


@dataclass(frozen=True)
class QueryMetrics:
    correct_1: int
    correct_k: int
    sparsity_1: float
    sparsity_k: float
    ged_1: float
    ged_k: float


def query_metrics(expl: Explanation, graphs: Mapping[str, Graph], truth: Mapping[str, int], k: int) -> QueryMetrics:
    if not expl.ranked:
        return QueryMetrics(0, 0, math.nan, math.nan, math.nan, math.nan)
    q = graphs[expl.query_id]
    top = expl.ranked[:k]
    sp = [sparsity(q, graphs[r.graph_id]) for r in top]
    geds = [r.ged for r in top]
    return QueryMetrics(
        correctness_at(expl, truth, 1),
        correctness_at(expl, truth, k),
        sp[0],
        float(np.mean(sp)),
        geds[0],
        float(np.mean(geds)),
    )


def _nanmean(xs: Sequence[float]) -> float:
    arr = np.asarray(xs, dtype=float)
    arr = arr[~np.isnan(arr)]
    return float(arr.mean()) if arr.size else math.nan


def summarize(
    dataset: str,
    fold: int,
    t: int,
    runtime_s: float,
    per_query: Sequence[QueryMetrics],
    oracle_calls: int,
    oracle_calls_cached: int,
) -> MetricsRecord:
    return MetricsRecord(
        dataset=dataset,
        fold=fold,
        t=t,
        runtime_s=runtime_s,
        correctness_at_1=float(np.mean([m.correct_1 for m in per_query])) if per_query else 0.0,
        correctness_at_k=float(np.mean([m.correct_k for m in per_query])) if per_query else 0.0,
        sparsity_at_1=_nanmean([m.sparsity_1 for m in per_query]),
        sparsity_at_k=_nanmean([m.sparsity_k for m in per_query]),
        ged_at_1=_nanmean([m.ged_1 for m in per_query]),
        ged_at_k=_nanmean([m.ged_k for m in per_query]),
        oracle_calls=int(oracle_calls),
        oracle_calls_cached=int(oracle_calls_cached),
        num_queries=len(per_query),
        num_failed=sum(1 for m in per_query if math.isnan(m.ged_1)),
    )
