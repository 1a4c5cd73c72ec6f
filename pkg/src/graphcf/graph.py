"""Graph and temporal dataset model, edit distance, similarity, and file I/O.

Graphs are undirected with non-negative edge weights stored as a dense
symmetric matrix. Vertex indices are shared across snapshots, so the edit
distance uses identity vertex alignment.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np


class GraphValidationError(ValueError):
    """A graph violates symmetry, diagonal or sign constraints."""


class DatasetFormatError(ValueError):
    """A dataset file record could not be parsed."""


class EmptyDatasetError(ValueError):
    """A dataset file holds no records."""


@dataclass(frozen=True, eq=False)
class Graph:
    weights: np.ndarray
    graph_id: str = ""

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=float, copy=True)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 1:
            raise GraphValidationError(f"graph {self.graph_id!r}: weights must be a non-empty square matrix")
        if not np.all(np.isfinite(w)):
            raise GraphValidationError(f"graph {self.graph_id!r}: non-finite weight")
        if np.any(w < 0):
            raise GraphValidationError(f"graph {self.graph_id!r}: negative weight")
        if np.any(np.diag(w) != 0):
            raise GraphValidationError(f"graph {self.graph_id!r}: non-zero diagonal")
        if not np.array_equal(w, w.T):
            raise GraphValidationError(f"graph {self.graph_id!r}: weights are not symmetric")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "graph_id", str(self.graph_id))

    @classmethod
    def from_edges(
        cls,
        num_nodes: int,
        edges: Iterable[Sequence[float]],
        graph_id: str = "",
    ) -> "Graph":
        """Build from ``(u, v)`` or ``(u, v, w)`` tuples; weight defaults to 1.0."""
        if num_nodes < 1:
            raise GraphValidationError(f"graph {graph_id!r}: num_nodes must be positive")
        seen: dict[tuple[int, int], float] = {}
        for e in edges:
            u, v = int(e[0]), int(e[1])
            w = float(e[2]) if len(e) > 2 else 1.0
            if not (0 <= u < num_nodes and 0 <= v < num_nodes) or u == v:
                raise GraphValidationError(f"graph {graph_id!r}: invalid edge ({u}, {v})")
            key = (min(u, v), max(u, v))
            if key in seen and seen[key] != w:
                raise GraphValidationError(
                    f"graph {graph_id!r}: weights[{u}][{v}] != weights[{v}][{u}]"
                )
            seen[key] = w
        mat = np.zeros((num_nodes, num_nodes))
        for (u, v), w in seen.items():
            if w < 0:
                raise GraphValidationError(f"graph {graph_id!r}: negative weight on ({u}, {v})")
            mat[u, v] = mat[v, u] = w
        return cls(mat, graph_id)

    @property
    def num_nodes(self) -> int:
        return self.weights.shape[0]

    @cached_property
    def adjacency(self) -> np.ndarray:
        return (self.weights > 0).astype(float)

    @property
    def num_edges(self) -> int:
        return int(np.count_nonzero(np.triu(self.weights, 1)))

    def edges(self) -> list[tuple[int, int, float]]:
        iu, ju = np.nonzero(np.triu(self.weights, 1))
        return [(int(i), int(j), float(self.weights[i, j])) for i, j in zip(iu, ju)]

    def with_id(self, graph_id: str) -> "Graph":
        return Graph(self.weights, graph_id)

    def structurally_equal(self, other: "Graph") -> bool:
        return self.weights.shape == other.weights.shape and bool(np.array_equal(self.weights, other.weights))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.graph_id == other.graph_id and self.structurally_equal(other)

    def __hash__(self) -> int:
        return hash((self.graph_id, self.weights.shape, self.weights.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(id={self.graph_id!r}, n={self.num_nodes}, m={self.num_edges})"


@dataclass(frozen=True)
class Snapshot:
    t: int
    members: tuple[tuple[Graph, int], ...]

    def __post_init__(self) -> None:
        members = tuple((g, int(y)) for g, y in self.members)
        ids = [g.graph_id for g, _ in members]
        if len(set(ids)) != len(ids):
            raise GraphValidationError(f"snapshot {self.t}: duplicate graph_id")
        for g, y in members:
            if y not in (0, 1):
                raise GraphValidationError(f"graph {g.graph_id!r}: label must be 0 or 1, got {y}")
        if self.t < 0:
            raise GraphValidationError("snapshot time index must be non-negative")
        object.__setattr__(self, "members", members)

    @property
    def graphs(self) -> list[Graph]:
        return [g for g, _ in self.members]

    @property
    def labels(self) -> dict[str, int]:
        return {g.graph_id: y for g, y in self.members}

    @property
    def ids(self) -> list[str]:
        return [g.graph_id for g, _ in self.members]

    def by_id(self) -> dict[str, Graph]:
        return {g.graph_id: g for g, _ in self.members}

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[tuple[Graph, int]]:
        return iter(self.members)


@dataclass(frozen=True)
class TemporalDataset:
    snapshots: tuple[Snapshot, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        snaps = tuple(self.snapshots)
        for expected, s in enumerate(snaps):
            if s.t != expected:
                raise GraphValidationError(
                    f"snapshot indices must be contiguous from 0; found t={s.t} at position {expected}"
                )
        for prev, cur in zip(snaps, snaps[1:]):
            missing = set(cur.ids) - set(prev.ids)
            if missing:
                gid = sorted(missing)[0]
                raise GraphValidationError(f"graph {gid!r} appears at t={cur.t} but not at t={prev.t}")
        object.__setattr__(self, "snapshots", snaps)

    @property
    def horizon(self) -> int:
        return len(self.snapshots) - 1

    def __len__(self) -> int:
        return len(self.snapshots)

    def __getitem__(self, t: int) -> Snapshot:
        return self.snapshots[t]

    def __iter__(self) -> Iterator[Snapshot]:
        return iter(self.snapshots)

    def structurally_equal(self, other: "TemporalDataset") -> bool:
        if len(self) != len(other):
            return False
        for a, b in zip(self, other):
            if a.t != b.t or len(a) != len(b):
                return False
            for (ga, ya), (gb, yb) in zip(a, b):
                if ya != yb or ga != gb:
                    return False
        return True


@dataclass(frozen=True)
class EditDistanceResult:
    ged: float
    node_term: int
    edge_term: float


def _padded_upper(g: Graph, n: int) -> np.ndarray:
    w = np.zeros((n, n))
    k = g.num_nodes
    w[:k, :k] = g.weights
    iu = np.triu_indices(n, 1)
    return w[iu]


def graph_edit_distance(a: Graph, b: Graph) -> EditDistanceResult:
    """Identity-aligned edit distance with unit costs.

    The smaller graph is padded with isolated vertices. Every vertex pair whose
    weight differs costs one edit (insertion, deletion or weight substitution),
    and every padded vertex costs one node insertion/deletion.
    """
    n = max(a.num_nodes, b.num_nodes)
    node_term = abs(a.num_nodes - b.num_nodes)
    edge_term = float(np.count_nonzero(_padded_upper(a, n) != _padded_upper(b, n)))
    return EditDistanceResult(ged=node_term + edge_term, node_term=node_term, edge_term=edge_term)


def similarity(a: Graph, b: Graph) -> float:
    return 1.0 / (1.0 + graph_edit_distance(a, b).ged)


def pairwise_ged(queries: Sequence[Graph], candidates: Sequence[Graph]) -> np.ndarray:
    """Vectorised ``graph_edit_distance`` over all (query, candidate) pairs."""
    if not queries or not candidates:
        return np.zeros((len(queries), len(candidates)))
    n = max(g.num_nodes for g in (*queries, *candidates))
    qa = np.stack([_padded_upper(g, n) for g in queries])
    ca = np.stack([_padded_upper(g, n) for g in candidates])
    qn = np.array([g.num_nodes for g in queries])
    cn = np.array([g.num_nodes for g in candidates])
    out = np.empty((len(queries), len(candidates)))
    for i in range(len(queries)):
        out[i] = np.count_nonzero(ca != qa[i], axis=1)
    return out + np.abs(qn[:, None] - cn[None, :])


# -- file format -----------------------------------------------------------


def _record(t: int, g: Graph, label: int) -> dict:
    return {
        "snapshot": t,
        "graph_id": g.graph_id,
        "num_nodes": g.num_nodes,
        "edges": [[u, v, w] for u, v, w in g.edges()],
        "label": label,
    }


def save_dataset(dataset: TemporalDataset, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for snap in dataset:
            for g, y in snap:
                fh.write(json.dumps(_record(snap.t, g, y)) + "\n")


def _parse_line(lineno: int, line: str) -> tuple[int, Graph, int]:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"line {lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(rec, dict):
        raise DatasetFormatError(f"line {lineno}: record must be an object")
    try:
        t = rec["snapshot"]
        gid = rec["graph_id"]
        n = rec["num_nodes"]
        edges = rec["edges"]
        label = rec["label"]
    except KeyError as exc:
        raise DatasetFormatError(f"line {lineno}: missing field {exc.args[0]!r}") from None
    if not isinstance(t, int) or not isinstance(n, int) or label not in (0, 1):
        raise DatasetFormatError(f"line {lineno}: snapshot/num_nodes must be int and label 0 or 1")
    if not isinstance(edges, list) or any(not isinstance(e, list) or len(e) != 3 for e in edges):
        raise DatasetFormatError(f"line {lineno}: edges must be a list of [u, v, w]")
    g = Graph.from_edges(n, edges, graph_id=str(gid))
    return t, g, int(label)


def load_dataset(path: str | Path) -> TemporalDataset:
    path = Path(path)
    by_t: dict[int, list[tuple[Graph, int]]] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            t, g, y = _parse_line(lineno, line)
            by_t.setdefault(t, []).append((g, y))
    if not by_t:
        raise EmptyDatasetError(f"{path}: dataset file is empty")
    snaps = tuple(Snapshot(t, tuple(by_t[t])) for t in sorted(by_t))
    return TemporalDataset(snaps, name=path.stem)
