"""Command-line driver: generate, run, explain, drift, report."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .datagen import CoauthorConfig, TreeCyclesConfig, generate_coauthor, generate_tree_cycles
from .drift import detect
from .explainer import Explainer
from .graph import load_dataset, save_dataset
from .harness import (
    RunConfig,
    aggregate,
    format_table,
    read_records,
    run_cv,
    write_report,
    write_run_outputs,
)

log = logging.getLogger("graphcf")


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.eval.seed = args.seed
        cfg.dataset.params["seed"] = args.seed
    if getattr(args, "k", None) is not None:
        cfg.explainer.k = args.k
    if getattr(args, "folds", None) is not None:
        cfg.eval.folds = args.folds
    if args.out is not None:
        cfg.out = args.out
    return RunConfig.from_dict(cfg.to_dict())


def cmd_generate(args) -> int:
    cfg = _config(args)
    params = dict(cfg.dataset.params)
    if cfg.dataset.family == "tree_cycles":
        ds = generate_tree_cycles(TreeCyclesConfig(**params))
    elif cfg.dataset.family == "coauthor":
        ds = generate_coauthor(CoauthorConfig(**params))
    else:
        raise ValueError("generate supports families 'tree_cycles' and 'coauthor'")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{cfg.dataset.family}.jsonl"
    save_dataset(ds, path)
    print(path)
    return 0


def cmd_run(args) -> int:
    cfg = _config(args)
    result = run_cv(cfg)
    out = write_run_outputs(result, cfg, cfg.out)
    if result.aggregate:
        print(format_table(result.aggregate))
    print(f"outputs written to {out}")
    if not result.records:
        raise RuntimeError("every fold failed; see failed_folds.json")
    return 0


def cmd_explain(args) -> int:
    state = Explainer.load(args.checkpoint)
    if args.k is not None:
        state.k = args.k
    ds = load_dataset(args.dataset)
    t = state.current_t if args.t is None else args.t
    if not 0 <= t <= ds.horizon:
        raise ValueError(f"snapshot t={t} not in dataset (0..{ds.horizon})")
    snap = ds[t]
    by_id = snap.by_id()
    if args.query not in by_id:
        raise KeyError(f"graph {args.query!r} not in snapshot t={t}")
    exp = state.explain(by_id[args.query], snap.graphs, t)
    print(json.dumps(exp.to_record()))
    return 0


def _read_sample(path: str) -> list[float]:
    text = Path(path).read_text().strip()
    if text.startswith("["):
        return [float(x) for x in json.loads(text)]
    return [float(x) for x in text.split()]


def cmd_drift(args) -> int:
    rep = detect(_read_sample(args.prev), _read_sample(args.curr), args.significance, args.t)
    print(
        json.dumps(
            {
                "t": rep.t,
                "ks_statistic": rep.ks_statistic,
                "p_value": rep.p_value,
                "drifted": rep.drifted,
                "sample_sizes": list(rep.sample_sizes),
            }
        )
    )
    return 0


def cmd_report(args) -> int:
    records = read_records(args.records)
    if args.out:
        write_report(records, args.out)
    print(format_table(aggregate(records)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML/JSON config with dataset/model/explainer/eval sections")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="graphcf", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="write a synthetic temporal dataset")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", parents=[common], help="run the cross-validated pipeline")
    r.add_argument("--k", type=int)
    r.add_argument("--folds", type=int)
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("explain", parents=[common], help="explain one graph with a saved checkpoint")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--dataset", required=True)
    e.add_argument("--query", required=True, help="graph_id of the query")
    e.add_argument("--t", type=int, help="snapshot index (default: checkpoint's last snapshot)")
    e.add_argument("--k", type=int)
    e.set_defaults(func=cmd_explain)

    d = sub.add_parser("drift", parents=[common], help="KS drift test on two error-sample files")
    d.add_argument("prev")
    d.add_argument("curr")
    d.add_argument("--significance", type=float, default=0.05)
    d.add_argument("--t", type=int, default=0)
    d.set_defaults(func=cmd_drift)

    rep = sub.add_parser("report", parents=[common], help="aggregate a per-fold metrics CSV")
    rep.add_argument("records", help="metrics_folds.csv")
    rep.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
