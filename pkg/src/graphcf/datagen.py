"""Seeded generators for the two temporal benchmark families."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graph import Graph, Snapshot, TemporalDataset, load_dataset
from .oracle import has_cycle, percentile_labels


@dataclass(frozen=True)
class TreeCyclesConfig:
    num_graphs: int = 100
    nodes_per_graph: int = 28
    num_snapshots: int = 4
    cycle_fraction: float = 0.54
    # mean number of extra (cycle-closing) edges on a cyclic graph, >= 1
    extra_edge_mean: float = 1.15
    mutation_rate: float = 0.1
    class_flip_prob: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_graphs <= 0:
            raise ValueError("num_graphs must be positive")
        if self.nodes_per_graph < 3:
            raise ValueError("nodes_per_graph must be at least 3")
        if self.num_snapshots < 1:
            raise ValueError("num_snapshots must be at least 1")
        for name in ("cycle_fraction", "mutation_rate", "class_flip_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.extra_edge_mean < 1.0:
            raise ValueError("extra_edge_mean must be >= 1")


@dataclass(frozen=True)
class CoauthorConfig:
    num_egos: int = 36
    nodes_per_ego: int = 13
    num_snapshots: int = 11
    # alter-alter edge density per ego ~ Beta with this mean / std
    density_mean: float = 0.44
    density_std: float = 0.08
    # collaborations per edge: 1 + Poisson(rate), rate = ego activity * yearly noise
    activity_log_mean: float = 0.0
    activity_log_std: float = 0.6
    yearly_log_std: float = 0.35
    # fraction of alter-alter pairs redrawn each active year
    edge_turnover: float = 0.15
    inactivity_prob: float = 0.15
    percentile: float = 75.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_egos <= 0:
            raise ValueError("num_egos must be positive")
        if self.nodes_per_ego < 2:
            raise ValueError("nodes_per_ego must be at least 2")
        if self.num_snapshots < 1:
            raise ValueError("num_snapshots must be at least 1")
        if not 0.0 < self.percentile < 100.0:
            raise ValueError("percentile must lie in (0, 100)")
        for name in ("inactivity_prob", "edge_turnover"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if not 0.0 < self.density_mean < 1.0 or self.density_std <= 0:
            raise ValueError("density_mean must lie in (0, 1) and density_std be positive")


# -- Tree-Cycles ---------------------------------------------------------------


def _prufer_tree(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random labelled spanning tree of K_n via a Prufer sequence."""
    adj = np.zeros((n, n))
    seq = rng.integers(0, n, size=n - 2)
    degree = np.ones(n, dtype=int)
    for x in seq:
        degree[x] += 1
    for x in seq:
        leaf = int(np.flatnonzero(degree == 1)[0])
        adj[leaf, x] = adj[x, leaf] = 1.0
        degree[leaf] -= 1
        degree[x] -= 1
    u, v = np.flatnonzero(degree == 1)
    adj[u, v] = adj[v, u] = 1.0
    return adj


def _components(adj: np.ndarray) -> np.ndarray:
    n = adj.shape[0]
    comp = -np.ones(n, dtype=int)
    c = 0
    for s in range(n):
        if comp[s] >= 0:
            continue
        stack = [s]
        comp[s] = c
        while stack:
            x = stack.pop()
            for y in np.flatnonzero(adj[x]):
                if comp[y] < 0:
                    comp[y] = c
                    stack.append(y)
        c += 1
    return comp


def _add_random_non_edge(adj: np.ndarray, rng: np.random.Generator, exclude=None) -> None:
    iu, ju = np.triu_indices(adj.shape[0], 1)
    free = [(i, j) for i, j in zip(iu, ju) if adj[i, j] == 0 and (i, j) != exclude]
    i, j = free[rng.integers(len(free))]
    adj[i, j] = adj[j, i] = 1.0


def _rewire(adj: np.ndarray, rng: np.random.Generator) -> None:
    """Move one edge while keeping the graph connected and the edge count fixed.

    A connected graph is cyclic iff |E| >= |V|, so class membership is kept.
    """
    iu, ju = np.nonzero(np.triu(adj, 1))
    k = rng.integers(len(iu))
    u, v = int(iu[k]), int(ju[k])
    adj[u, v] = adj[v, u] = 0.0
    comp = _components(adj)
    if comp[u] != comp[v]:
        left = np.flatnonzero(comp == comp[u])
        right = np.flatnonzero(comp == comp[v])
        pairs = [(min(a, b), max(a, b)) for a in left for b in right]
        if len(pairs) > 1:
            pairs.remove((u, v))
        i, j = pairs[rng.integers(len(pairs))]
        adj[i, j] = adj[j, i] = 1.0
    else:
        _add_random_non_edge(adj, rng, exclude=(u, v))


def _random_spanning_tree_of(adj: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Keep a random spanning tree of a connected graph (random-order Kruskal)."""
    n = adj.shape[0]
    iu, ju = np.nonzero(np.triu(adj, 1))
    order = rng.permutation(len(iu))
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    out = np.zeros_like(adj)
    for k in order:
        a, b = int(iu[k]), int(ju[k])
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            out[a, b] = out[b, a] = 1.0
    return out


def make_cyclic(adj: np.ndarray, rng: np.random.Generator, extra: int = 1) -> np.ndarray:
    out = adj.copy()
    for _ in range(extra):
        _add_random_non_edge(out, rng)
    return out


def break_cycles(adj: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return _random_spanning_tree_of(adj, rng)


def _extra_edges(cfg: TreeCyclesConfig, rng: np.random.Generator) -> int:
    return 1 + int(rng.poisson(cfg.extra_edge_mean - 1.0))


def generate_tree_cycles(cfg: TreeCyclesConfig) -> TemporalDataset:
    rng = np.random.default_rng(cfg.seed)
    n = cfg.nodes_per_graph
    width = len(str(cfg.num_graphs - 1))
    current: list[np.ndarray] = []
    for _ in range(cfg.num_graphs):
        adj = _prufer_tree(n, rng)
        if rng.random() < cfg.cycle_fraction:
            adj = make_cyclic(adj, rng, _extra_edges(cfg, rng))
        current.append(adj)

    snapshots = []
    for t in range(cfg.num_snapshots):
        if t > 0:
            nxt = []
            for adj in current:
                cyclic = adj.sum() / 2 >= n
                if rng.random() < cfg.class_flip_prob:
                    adj = break_cycles(adj, rng) if cyclic else make_cyclic(adj, rng, _extra_edges(cfg, rng))
                else:
                    adj = adj.copy()
                    moves = math.ceil(cfg.mutation_rate * adj.sum() / 2)
                    for _ in range(moves):
                        _rewire(adj, rng)
                nxt.append(adj)
            current = nxt
        members = []
        for i, adj in enumerate(current):
            g = Graph(adj, f"g{i:0{width}d}")
            members.append((g, int(has_cycle(g))))
        snapshots.append(Snapshot(t, tuple(members)))
    return TemporalDataset(tuple(snapshots), name="tree_cycles")


# -- co-authorship ego-networks ------------------------------------------------


def _beta_params(mean: float, std: float) -> tuple[float, float]:
    var = min(std**2, mean * (1 - mean) * 0.99)
    k = mean * (1 - mean) / var - 1
    return mean * k, (1 - mean) * k


def relabel_by_percentile(dataset: TemporalDataset, percentile: float = 75.0) -> TemporalDataset:
    snaps = []
    for s in dataset:
        labels = percentile_labels(s, percentile)
        snaps.append(Snapshot(s.t, tuple((g, labels[g.graph_id]) for g in s.graphs)))
    return TemporalDataset(tuple(snaps), name=dataset.name)


def generate_coauthor(cfg: CoauthorConfig) -> TemporalDataset:
    """Synthetic ego-networks: vertex 0 is the ego, linked to every co-author."""
    rng = np.random.default_rng(cfg.seed)
    n = cfg.nodes_per_ego
    a, b = _beta_params(cfg.density_mean, cfg.density_std)
    iu, ju = np.triu_indices(n, 1)
    alter = iu > 0
    width = len(str(cfg.num_egos - 1))

    density = rng.beta(a, b, size=cfg.num_egos)
    activity = np.exp(rng.normal(cfg.activity_log_mean, cfg.activity_log_std, size=cfg.num_egos))
    present = [np.where(alter, rng.random(len(iu)) < density[e], True) for e in range(cfg.num_egos)]

    def draw_weights(e: int) -> np.ndarray:
        rate = activity[e] * math.exp(rng.normal(0.0, cfg.yearly_log_std))
        w = np.zeros((n, n))
        vals = 1 + rng.poisson(rate, size=len(iu))
        w[iu, ju] = np.where(present[e], vals, 0)
        return w + w.T

    nets = [draw_weights(e) for e in range(cfg.num_egos)]
    snapshots = []
    for t in range(cfg.num_snapshots):
        if t > 0:
            for e in range(cfg.num_egos):
                if rng.random() < cfg.inactivity_prob:
                    continue
                redraw = alter & (rng.random(len(iu)) < cfg.edge_turnover)
                present[e] = np.where(redraw, rng.random(len(iu)) < density[e], present[e])
                nets[e] = draw_weights(e)
        graphs = [Graph(w, f"ego{e:0{width}d}") for e, w in enumerate(nets)]
        snapshots.append(Snapshot(t, tuple((g, 0) for g in graphs)))
    return relabel_by_percentile(TemporalDataset(tuple(snapshots), name="coauthor"), cfg.percentile)


def load_coauthor_file(path: str | Path, cfg: CoauthorConfig | None = None) -> TemporalDataset:
    """Load ego-networks and overwrite stored labels with the percentile rule."""
    cfg = cfg or CoauthorConfig()
    return relabel_by_percentile(load_dataset(path), cfg.percentile)
