from __future__ import annotations

import numpy as np
import pytest

from graphcf.graph import Graph

# (criterion, passed, detail) lines collected by test_acceptance.py
ACCEPTANCE: list[tuple[str, bool, str]] = []


def random_weights(rng: np.random.Generator, n: int, p: float = 0.4, weights=(1.0,)) -> np.ndarray:
    mask = np.triu(rng.random((n, n)) < p, 1)
    w = mask * rng.choice(np.asarray(weights, dtype=float), size=(n, n))
    return w + w.T


def random_graph(rng: np.random.Generator, n: int, p: float = 0.4, graph_id: str = "g", weights=(1.0,)) -> Graph:
    return Graph(random_weights(rng, n, p, weights), graph_id)


def path_graph(n: int, graph_id: str = "p") -> Graph:
    return Graph.from_edges(n, [(i, i + 1, 1.0) for i in range(n - 1)], graph_id)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
