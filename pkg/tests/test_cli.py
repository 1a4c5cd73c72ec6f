import json

import pytest
import yaml

from graphcf.cli import main


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text(
        yaml.safe_dump(
            {
                "dataset": {"family": "tree_cycles", "params": {"num_graphs": 20, "nodes_per_graph": 10, "num_snapshots": 3}},
                "model": {"epochs": 10},
                "eval": {"folds": 2},
            }
        )
    )
    return path


def test_generate_run_explain_report(tmp_path, config, capsys):
    out = tmp_path / "out"
    assert main(["generate", "--config", str(config), "--out", str(out), "--seed", "2"]) == 0
    data = out / "tree_cycles.jsonl"
    assert data.exists()

    assert main(["run", "--config", str(config), "--out", str(out), "--k", "4", "--folds", "2", "--seed", "2"]) == 0
    printed = capsys.readouterr().out
    assert "correctness_at_k" in printed
    assert (out / "metrics_aggregate.csv").exists()

    rc = main(["explain", "--checkpoint", str(out / "checkpoints" / "fold_00.json"), "--dataset", str(data), "--query", "g00", "--t", "1"])
    assert rc == 0
    rec = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert rec["query_id"] == "g00" and rec["t"] == 1 and len(rec["ranked"]) == 4

    assert main(["report", str(out / "metrics_folds.csv"), "--out", str(tmp_path / "rep")]) == 0
    assert (tmp_path / "rep" / "metrics_aggregate.csv").exists()


def test_drift_subcommand(tmp_path, capsys):
    a, b = tmp_path / "a.txt", tmp_path / "b.json"
    a.write_text("0.1 0.2 0.3 0.4\n0.5")
    b.write_text(json.dumps([1.1, 1.2, 1.3, 1.4, 1.5]))
    assert main(["drift", str(a), str(b), "--t", "2"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["ks_statistic"] == 1.0 and rep["t"] == 2 and rep["sample_sizes"] == [5, 5]
    assert rep["drifted"] == (rep["p_value"] < 0.05)


def test_errors_exit_nonzero_with_diagnostic(tmp_path, capsys):
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    assert main(["drift", str(empty), str(empty)]) == 1
    assert capsys.readouterr().err.startswith("error:")
    bad = tmp_path / "bad.yaml"
    bad.write_text("eval:\n  folds: 1\n")
    assert main(["run", "--config", str(bad)]) == 1
    assert "folds" in capsys.readouterr().err


def test_missing_subcommand_exits():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code != 0
