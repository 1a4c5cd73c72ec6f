"""Cross-validated evaluation over temporal snapshots and CSV reporting."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
import yaml

from .datagen import CoauthorConfig, TreeCyclesConfig, generate_coauthor, generate_tree_cycles, load_coauthor_file
from .drift import detect, error_sample, error_sample_by_class, detect_per_class
from .explainer import AdaptConfig, Explainer, ExplainerError, Explanation
from .gae import GaeTrainConfig
from .graph import TemporalDataset, load_dataset
from .metrics import TABLE_COLUMNS, MetricsRecord, query_metrics, summarize
from .oracle import Oracle

log = logging.getLogger(__name__)

FAMILY_DEFAULTS = {
    "tree_cycles": {"epochs": 50, "learning_rate": 1e-3, "oracle": "cycle"},
    "coauthor": {"epochs": 150, "learning_rate": 1e-4, "oracle": "percentile"},
}


class ConfigError(ValueError):
    pass


@dataclass
class DatasetSection:
    family: str = "tree_cycles"
    path: str | None = None
    oracle: str | None = None
    params: dict[str, Any] = field(default_factory=dict)


@dataclass
class ModelSection:
    epochs: int | None = None
    learning_rate: float | None = None


@dataclass
class ExplainerSection:
    k: int = 10
    adapt_epochs: int | None = None
    adapt_learning_rate: float | None = None
    rehearsal: bool = True
    warm_start_scorer: bool = False
    opposite_pool_only: bool = False
    l2_lambda: float = 1.0


@dataclass
class EvalSection:
    folds: int = 10
    holdout: float = 0.10
    seed: int = 0
    significance: float = 0.05
    drift_per_class: bool = False
    # "inferred": both samples routed by the current GAEs; "native": previous
    # snapshot routed by the labels the explainer held for it (oracle at t=0)
    drift_routing: str = "inferred"
    n_jobs: int = 1


@dataclass
class RunConfig:
    dataset: DatasetSection = field(default_factory=DatasetSection)
    model: ModelSection = field(default_factory=ModelSection)
    explainer: ExplainerSection = field(default_factory=ExplainerSection)
    eval: EvalSection = field(default_factory=EvalSection)
    out: str = "results"

    def __post_init__(self) -> None:
        if self.dataset.family not in (*FAMILY_DEFAULTS, "file"):
            raise ConfigError(f"unknown dataset family {self.dataset.family!r}")
        if self.dataset.family == "file" and not self.dataset.path:
            raise ConfigError("dataset.path is required for family 'file'")
        if self.eval.folds < 2:
            raise ConfigError("eval.folds must be >= 2")
        if not 0.0 < self.eval.holdout < 1.0:
            raise ConfigError("eval.holdout must lie in (0, 1)")
        if self.explainer.k < 1:
            raise ConfigError("explainer.k must be >= 1")
        if self.eval.drift_routing not in ("inferred", "native"):
            raise ConfigError("eval.drift_routing must be 'inferred' or 'native'")

    @classmethod
    def from_dict(cls, d: dict | None) -> "RunConfig":
        d = dict(d or {})
        sections = {"dataset": DatasetSection, "model": ModelSection, "explainer": ExplainerSection, "eval": EvalSection}
        kwargs: dict[str, Any] = {}
        for key, value in d.items():
            if key in sections:
                allowed = {f.name for f in fields(sections[key])}
                unknown = set(value or {}) - allowed
                if unknown:
                    raise ConfigError(f"unknown key(s) in [{key}]: {sorted(unknown)}")
                kwargs[key] = sections[key](**(value or {}))
            elif key == "out":
                kwargs["out"] = str(value)
            else:
                raise ConfigError(f"unknown config section {key!r}")
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            data = yaml.safe_load(Path(path).read_text())
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def oracle_kind(self) -> str:
        if self.dataset.oracle:
            return self.dataset.oracle
        return FAMILY_DEFAULTS.get(self.dataset.family, FAMILY_DEFAULTS["tree_cycles"])["oracle"]

    def train_config(self, seed: int = 0) -> GaeTrainConfig:
        base = FAMILY_DEFAULTS.get(self.dataset.family)
        if base is None:
            base = FAMILY_DEFAULTS["coauthor" if self.oracle_kind == "percentile" else "tree_cycles"]
        return GaeTrainConfig(
            epochs=self.model.epochs or base["epochs"],
            learning_rate=self.model.learning_rate if self.model.learning_rate is not None else base["learning_rate"],
            seed=seed,
        )

    def adapt_config(self) -> AdaptConfig:
        tc = self.train_config()
        return AdaptConfig(
            epochs=self.explainer.adapt_epochs or max(1, tc.epochs // 5),
            learning_rate=(
                self.explainer.adapt_learning_rate
                if self.explainer.adapt_learning_rate is not None
                else tc.learning_rate
            ),
            rehearsal=self.explainer.rehearsal,
            warm_start_scorer=self.explainer.warm_start_scorer,
        )


def build_dataset(cfg: RunConfig) -> TemporalDataset:
    ds = cfg.dataset
    if ds.family == "tree_cycles":
        return generate_tree_cycles(TreeCyclesConfig(**ds.params))
    if ds.family == "coauthor":
        if ds.path:
            return load_coauthor_file(ds.path, CoauthorConfig(**ds.params))
        return generate_coauthor(CoauthorConfig(**ds.params))
    return load_dataset(ds.path)


def holdout_split(ids: Sequence[str], folds: int, holdout: float, seed: int) -> list[list[str]]:
    """Test ids per fold: consecutive windows (wrapping) over a seeded permutation."""
    ids = sorted(ids)
    n = len(ids)
    m = max(1, min(n - 1, int(round(holdout * n))))
    perm = np.random.default_rng(seed).permutation(n)
    return [sorted(ids[perm[(f * m + i) % n]] for i in range(m)) for f in range(folds)]


@dataclass
class FoldResult:
    fold: int
    records: list[MetricsRecord]
    explanations: list[Explanation]
    state: dict | None
    failed: str | None = None


def _fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


def run_fold(cfg: RunConfig, dataset: TemporalDataset, fold: int, test_ids: Sequence[str]) -> FoldResult:
    name = dataset.name or cfg.dataset.family
    seed = _fold_seed(cfg.eval.seed, fold)
    oracle = Oracle.for_dataset(dataset, cfg.oracle_kind, float(cfg.dataset.params.get("percentile", 75.0)))
    explainer = Explainer.create(
        seed=seed,
        k=cfg.explainer.k,
        train_config=cfg.train_config(seed),
        adapt_config=cfg.adapt_config(),
        l2_lambda=cfg.explainer.l2_lambda,
        opposite_pool_only=cfg.explainer.opposite_pool_only,
    )
    snap0 = dataset[0]
    train_ids = [g for g in snap0.ids if g not in set(test_ids)]
    records: list[MetricsRecord] = []
    explanations: list[Explanation] = []
    for snap in dataset:
        oracle.reset_counter()
        start = time.perf_counter()
        drift = None
        try:
            if snap.t == 0:
                explainer.fit_initial(snap, oracle, train_ids)
            else:
                prev_labels = explainer.labels if cfg.eval.drift_routing == "native" else None
                if cfg.eval.drift_per_class:
                    reps = detect_per_class(
                        error_sample_by_class(explainer, dataset[snap.t - 1], prev_labels),
                        error_sample_by_class(explainer, snap),
                        cfg.eval.significance,
                        snap.t,
                    )
                    drift = min(reps.values(), key=lambda r: r.p_value) if reps else None
                else:
                    drift = detect(
                        error_sample(explainer, dataset[snap.t - 1], prev_labels),
                        error_sample(explainer, snap),
                        cfg.eval.significance,
                        snap.t,
                    )
                explainer.adapt(snap)
            exps = explainer.explain_many(test_ids, snap)
        except ExplainerError as exc:
            log.warning("fold %d failed at t=%d: %s", fold, snap.t, exc)
            return FoldResult(fold, records, explanations, None, failed=f"t={snap.t}: {exc}")
        runtime = time.perf_counter() - start
        graphs = snap.by_id()
        truth = snap.labels
        per_query = [query_metrics(e, graphs, truth, cfg.explainer.k) for e in exps]
        if snap.t == 0:
            calls, cached = explainer.oracle_usage.pair_lookups, explainer.oracle_usage.calls
        else:
            calls = cached = oracle.read_counter()
        rec = summarize(name, fold, snap.t, runtime, per_query, calls, cached)
        if drift is not None:
            rec.drift_ks, rec.drift_p, rec.drifted = drift.ks_statistic, drift.p_value, int(drift.drifted)
        records.append(rec)
        explanations.extend(exps)
    return FoldResult(fold, records, explanations, explainer.to_dict())


@dataclass
class CVResult:
    records: list[MetricsRecord]
    aggregate: list[dict]
    explanations: dict[int, list[Explanation]]
    states: dict[int, dict]
    failed_folds: dict[int, str]


def run_cv(cfg: RunConfig, dataset: TemporalDataset | None = None) -> CVResult:
    dataset = dataset if dataset is not None else build_dataset(cfg)
    splits = holdout_split(dataset[0].ids, cfg.eval.folds, cfg.eval.holdout, cfg.eval.seed)
    if cfg.eval.n_jobs > 1:
        with ProcessPoolExecutor(cfg.eval.n_jobs) as pool:
            results = list(pool.map(run_fold, [cfg] * len(splits), [dataset] * len(splits), range(len(splits)), splits))
    else:
        results = [run_fold(cfg, dataset, f, ids) for f, ids in enumerate(splits)]
    records, explanations, states, failed = [], {}, {}, {}
    for res in results:
        if res.failed:
            failed[res.fold] = res.failed
            continue
        records.extend(res.records)
        explanations[res.fold] = res.explanations
        states[res.fold] = res.state
    if failed:
        log.warning("%d fold(s) excluded from aggregates: %s", len(failed), failed)
    return CVResult(records, aggregate(records), explanations, states, failed)


def aggregate(records: Iterable[MetricsRecord]) -> list[dict]:
    """Mean and population std over folds per (dataset, t), NaNs ignored."""
    groups: dict[tuple[str, int], list[MetricsRecord]] = {}
    for r in records:
        groups.setdefault((r.dataset, r.t), []).append(r)
    rows = []
    for (name, t) in sorted(groups):
        rs = groups[(name, t)]
        row: dict[str, Any] = {"dataset": name, "t": t, "folds": len(rs)}
        for col in TABLE_COLUMNS:
            vals = np.array([float(getattr(r, col)) for r in rs])
            vals = vals[~np.isnan(vals)]
            row[f"{col}_mean"] = float(vals.mean()) if vals.size else math.nan
            row[f"{col}_std"] = float(vals.std()) if vals.size else math.nan
        rows.append(row)
    return rows


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_report(records: Sequence[MetricsRecord], path: str | Path) -> tuple[Path, Path]:
    """Write ``metrics_folds.csv`` and ``metrics_aggregate.csv`` into directory ``path``."""
    if not records:
        raise ValueError("no records to write")
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    ordered = sorted(records, key=lambda r: (r.dataset, r.fold, r.t))
    folds_path = out / "metrics_folds.csv"
    names = MetricsRecord.field_names()
    with folds_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for r in ordered:
            w.writerow([_fmt(getattr(r, n)) for n in names])
    agg_path = out / "metrics_aggregate.csv"
    rows = aggregate(ordered)
    with agg_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        header = list(rows[0].keys())
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(row[h]) for h in header])
    return folds_path, agg_path


def read_records(path: str | Path) -> list[MetricsRecord]:
    types = {f.name: f.type for f in fields(MetricsRecord)}
    out = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            kwargs: dict[str, Any] = {}
            for k, v in row.items():
                if k not in types:
                    continue
                tp = types[k]
                if tp in ("int", int):
                    kwargs[k] = int(v)
                elif tp in ("float", float):
                    kwargs[k] = float(v)
                else:
                    kwargs[k] = v
            out.append(MetricsRecord(**kwargs))
    return out


def write_run_outputs(result: CVResult, cfg: RunConfig, out: str | Path) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if result.records:
        write_report(result.records, out)
    with (out / "explanations.jsonl").open("w", encoding="utf-8") as fh:
        for fold in sorted(result.explanations):
            for e in result.explanations[fold]:
                fh.write(json.dumps({"fold": fold, **e.to_record()}) + "\n")
    ckpt = out / "checkpoints"
    ckpt.mkdir(exist_ok=True)
    for fold, state in sorted(result.states.items()):
        (ckpt / f"fold_{fold:02d}.json").write_text(json.dumps(state))
    (out / "config.yaml").write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=False))
    if result.failed_folds:
        (out / "failed_folds.json").write_text(json.dumps(result.failed_folds, indent=2))
    return out


def format_table(rows: Sequence[dict]) -> str:
    header = ["dataset", "t", "folds"] + [c for c in TABLE_COLUMNS]
    lines = ["\t".join(header)]
    for row in rows:
        cells = [str(row["dataset"]), str(row["t"]), str(row["folds"])]
        for c in TABLE_COLUMNS:
            cells.append(f"{row[f'{c}_mean']:.2f}±{row[f'{c}_std']:.3f}")
        lines.append("\t".join(cells))
    return "\n".join(lines)
