"""Temporal graph counterfactual explanations with class-specific graph autoencoders."""

from .drift import DriftReport, detect, ks_two_sample
from .explainer import AdaptConfig, Explainer, Explanation, baseline_dce
from .gae import GaeModel, GaeTrainConfig, reconstruction_error
from .graph import Graph, Snapshot, TemporalDataset, graph_edit_distance, load_dataset, save_dataset, similarity
from .harness import RunConfig, run_cv, write_report
from .metrics import MetricsRecord
from .oracle import Oracle
from .scorer import PairFeatures, PairScorer

__version__ = "0.1.0"

__all__ = [
    "AdaptConfig",
    "DriftReport",
    "Explainer",
    "Explanation",
    "GaeModel",
    "GaeTrainConfig",
    "Graph",
    "MetricsRecord",
    "Oracle",
    "PairFeatures",
    "PairScorer",
    "RunConfig",
    "Snapshot",
    "TemporalDataset",
    "baseline_dce",
    "detect",
    "graph_edit_distance",
    "ks_two_sample",
    "load_dataset",
    "reconstruction_error",
    "run_cv",
    "save_dataset",
    "similarity",
    "write_report",
]
