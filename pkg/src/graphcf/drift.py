"""Drift detection on reconstruction-error samples with a two-sample KS test."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.special import kolmogorov

from .graph import Snapshot
from .scorer import error_table


@dataclass(frozen=True)
class DriftReport:
    t: int
    ks_statistic: float
    p_value: float
    drifted: bool
    sample_sizes: tuple[int, int]
    significance: float = 0.05


def _routed_errors(explainer, snapshot: Snapshot, labels: Mapping[str, int] | None):
    graphs = sorted(snapshot.graphs, key=lambda g: g.graph_id)
    table = error_table(graphs, explainer.f0, explainer.f1)
    if labels is None:
        cls = (table[:, 1] < table[:, 0]).astype(int)
    else:
        cls = np.array([labels[g.graph_id] for g in graphs], dtype=int)
    return table[np.arange(len(graphs)), cls], cls


def error_sample(explainer, snapshot: Snapshot, labels: Mapping[str, int] | None = None) -> list[float]:
    """Error of each graph under the GAE of its class, ordered by graph id.

    ``labels`` overrides the class routing (e.g. oracle labels at t=0);
    otherwise each graph goes to the GAE with the lower error.
    """
    return _routed_errors(explainer, snapshot, labels)[0].tolist()


def error_sample_by_class(
    explainer, snapshot: Snapshot, labels: Mapping[str, int] | None = None
) -> dict[int, list[float]]:
    errs, cls = _routed_errors(explainer, snapshot, labels)
    return {c: errs[cls == c].tolist() for c in (0, 1)}


def ks_statistic(a: Sequence[float], b: Sequence[float]) -> float:
    xa = np.sort(np.asarray(a, dtype=float))
    xb = np.sort(np.asarray(b, dtype=float))
    grid = np.concatenate([xa, xb])
    fa = np.searchsorted(xa, grid, side="right") / len(xa)
    fb = np.searchsorted(xb, grid, side="right") / len(xb)
    return float(np.max(np.abs(fa - fb)))


def ks_two_sample(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Exact KS statistic with the asymptotic Kolmogorov p-value."""
    if len(a) == 0 or len(b) == 0:
        raise ValueError("KS test needs two non-empty samples")
    d = ks_statistic(a, b)
    n_eff = len(a) * len(b) / (len(a) + len(b))
    p = float(kolmogorov(math.sqrt(n_eff) * d))
    return d, min(1.0, max(0.0, p))


def detect(
    prev_errors: Sequence[float],
    curr_errors: Sequence[float],
    significance: float = 0.05,
    t: int = 0,
    on_drift: Callable[[DriftReport], None] | None = None,
) -> DriftReport:
    d, p = ks_two_sample(prev_errors, curr_errors)
    report = DriftReport(t, d, p, p < significance, (len(prev_errors), len(curr_errors)), significance)
    if report.drifted and on_drift is not None:
        on_drift(report)
    return report


def detect_per_class(
    prev: Mapping[int, Sequence[float]],
    curr: Mapping[int, Sequence[float]],
    significance: float = 0.05,
    t: int = 0,
) -> dict[int, DriftReport]:
    """One test per class; classes empty on either side are skipped."""
    return {
        c: detect(prev[c], curr[c], significance, t)
        for c in sorted(set(prev) & set(curr))
        if len(prev[c]) and len(curr[c])
    }
