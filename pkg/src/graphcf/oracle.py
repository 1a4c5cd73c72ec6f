"""Ground-truth classifiers with an invocation counter."""

from __future__ import annotations

import threading
from typing import Mapping

import numpy as np

from .graph import Graph, Snapshot


def has_cycle(g: Graph) -> bool:
    """Iterative depth-first search for a cycle in an undirected graph."""
    adj = [np.flatnonzero(row).tolist() for row in g.adjacency]
    seen = [False] * g.num_nodes
    for root in range(g.num_nodes):
        if seen[root]:
            continue
        seen[root] = True
        stack = [(root, -1)]
        while stack:
            node, parent = stack.pop()
            for nb in adj[node]:
                if nb == parent:
                    continue
                if seen[nb]:
                    return True
                seen[nb] = True
                stack.append((nb, node))
    return False


def ego_mean(g: Graph) -> float:
    """Mean over vertices of the sum of incident edge weights."""
    return float(g.weights.sum(axis=1).mean())


def percentile_thresholds(snapshots, percentile: float = 75.0) -> dict[int, float]:
    return {s.t: float(np.percentile([ego_mean(g) for g in s.graphs], percentile)) for s in snapshots}


def percentile_labels(snapshot: Snapshot, percentile: float = 75.0) -> dict[str, int]:
    """Label 1 iff an ego's mean is at or above the snapshot percentile (ties go to 1)."""
    means = {g.graph_id: ego_mean(g) for g in snapshot.graphs}
    thr = float(np.percentile(list(means.values()), percentile))
    return {gid: int(m >= thr) for gid, m in means.items()}


class Oracle:
    """Omniscient classifier. ``kind`` is ``"cycle"`` or ``"percentile"``.

    The percentile kind classifies against thresholds frozen per snapshot when
    the oracle is built, so classifying held-out graphs never moves them.
    """

    def __init__(self, kind: str, thresholds: Mapping[int, float] | None = None):
        if kind not in ("cycle", "percentile"):
            raise ValueError(f"unknown oracle kind {kind!r}")
        if kind == "percentile" and thresholds is None:
            raise ValueError("percentile oracle needs a threshold table")
        self.kind = kind
        self.thresholds = dict(thresholds or {})
        self._count = 0
        self._lock = threading.Lock()

    @classmethod
    def for_dataset(cls, dataset, kind: str, percentile: float = 75.0) -> "Oracle":
        if kind == "cycle":
            return cls("cycle")
        return cls("percentile", percentile_thresholds(dataset, percentile))

    @property
    def call_count(self) -> int:
        return self._count

    def classify(self, g: Graph, t: int = 0) -> int:
        if self.kind == "percentile" and t not in self.thresholds:
            raise KeyError(f"no percentile threshold for snapshot t={t}")
        with self._lock:
            self._count += 1
        if self.kind == "cycle":
            return int(has_cycle(g))
        return int(ego_mean(g) >= self.thresholds[t])

    def reset_counter(self) -> None:
        with self._lock:
            self._count = 0

    def read_counter(self) -> int:
        return self._count
