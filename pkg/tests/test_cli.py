import json

import pytest

from graphdx.cli import main


def run(argv):
    return main(argv)


class TestBuildGraph:
    def test_happy_path(self, tmp_path, t1_corpus_file, capsys):
        out = tmp_path / "g.json"
        code = run(["build-graph", "--dataset", str(t1_corpus_file),
                    "--out", str(out)])
        assert code == 0
        assert out.exists()
        data = json.loads(out.read_text())
        assert data["format"] == "graphdx.graph"
        assert len(data["adjacency"]) == 49
        tsv = tmp_path / "g.json.tsv"
        assert tsv.exists()
        assert "graph: 7 nodes" in capsys.readouterr().out

    def test_unweighted_flag(self, tmp_path, t1_corpus_file):
        out = tmp_path / "g.json"
        assert run(["build-graph", "--dataset", str(t1_corpus_file),
                    "--out", str(out), "--unweighted"]) == 0
        data = json.loads(out.read_text())
        assert data["weighted"] is False
        assert set(data["adjacency"]) <= {0.0, 1.0}

    def test_missing_dataset_file(self, tmp_path, capsys):
        code = run(["build-graph", "--dataset", str(tmp_path / "nope.json"),
                    "--out", str(tmp_path / "g.json")])
        assert code == 1
        assert "error:" in capsys.readouterr().err


class TestUsageErrors:
    def test_train_without_dataset_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run(["train"])
        assert exc.value.code == 2
        assert "--dataset" in capsys.readouterr().err

    def test_unknown_flag_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run(["train", "--dataset", "x.json", "--frobnicate"])
        assert exc.value.code == 2

    def test_unknown_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            run(["explode"])
        assert exc.value.code == 2


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    """A tiny end-to-end training run shared by the CLI tests."""
    tmp_path = tmp_path_factory.mktemp("cli_train")
    corpus = tmp_path / "t1.json"
    from conftest import T1_GOAL_DICTS
    corpus.write_text(json.dumps({"goals": T1_GOAL_DICTS}))
    ckpt = tmp_path / "ckpt.json"
    graph = tmp_path / "graph.json"
    code = main(["train", "--dataset", str(corpus), "--out", str(ckpt),
                 "--graph-out", str(graph), "--epochs", "2",
                 "--episodes-per-epoch", "8", "--batch-size", "4",
                 "--hidden-dim", "8", "--embed-dim", "4", "--seed", "3",
                 "--quiet"])
    assert code == 0
    return {"corpus": corpus, "ckpt": ckpt, "graph": graph, "dir": tmp_path}


class TestTrainEvalSimulate:
    def test_train_outputs_exist(self, trained):
        assert trained["ckpt"].exists()
        assert trained["graph"].exists()
        log = trained["dir"] / "ckpt.json.log.csv"
        assert log.exists()
        lines = log.read_text().strip().split("\n")
        assert lines[0] == "epoch,loss,success_rate,avg_turns,epsilon"
        assert len(lines) == 3

    def test_checkpoint_loads_and_records_config(self, trained):
        from graphdx.numkit import load_checkpoint
        ckpt = load_checkpoint(trained["ckpt"])
        assert ckpt.config["epochs"] == 2
        assert ckpt.config["seed"] == 3
        assert ckpt.graph_hash

    def test_eval_writes_reports(self, trained, tmp_path, capsys):
        out_dir = tmp_path / "eval"
        code = run(["eval", "--checkpoint", str(trained["ckpt"]),
                    "--dataset", str(trained["corpus"]),
                    "--graph", str(trained["graph"]),
                    "--out-dir", str(out_dir)])
        assert code == 0
        report = json.loads((out_dir / "report.json").read_text())
        assert "accuracy" in report and 0.0 <= report["accuracy"] <= 1.0
        assert report["avg_turns"] <= 22
        confusion = (out_dir / "confusion.csv").read_text().strip().split("\n")
        assert confusion[0] == "true_disease,d1,d2,timeout"
        embeddings = (out_dir / "embeddings.csv").read_text().strip().split("\n")
        assert embeddings[0] == "node,kind,x,y"
        assert len(embeddings) == 8  # header + 7 nodes

    def test_eval_graph_checkpoint_requires_graph(self, trained, tmp_path, capsys):
        code = run(["eval", "--checkpoint", str(trained["ckpt"]),
                    "--dataset", str(trained["corpus"]),
                    "--out-dir", str(tmp_path)])
        assert code == 1
        assert "--graph" in capsys.readouterr().err

    def test_simulate_writes_transcripts(self, trained, tmp_path, capsys):
        out = tmp_path / "episodes.jsonl"
        code = run(["simulate", "--checkpoint", str(trained["ckpt"]),
                    "--dataset", str(trained["corpus"]),
                    "--graph", str(trained["graph"]),
                    "--out", str(out)])
        assert code == 0
        lines = [json.loads(line) for line in out.read_text().strip().split("\n")]
        assert all({"goal_id", "turn", "action", "kind", "answer",
                    "reward", "result"} <= set(rec) for rec in lines)
        final = lines[-1]
        assert final["result"] in {"success", "fail_wrong_disease", "fail_timeout"}

    def test_config_file_merged_with_flag_override(self, trained, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"epochs": 1, "hidden_dim": 8, "embed_dim": 4,
                                   "episodes_per_epoch": 4, "batch_size": 4,
                                   "seed": 1}))
        ckpt = tmp_path / "from_cfg.json"
        code = run(["train", "--dataset", str(trained["corpus"]),
                    "--out", str(ckpt), "--config", str(cfg),
                    "--seed", "42", "--quiet"])
        assert code == 0
        from graphdx.numkit import load_checkpoint
        loaded = load_checkpoint(ckpt)
        assert loaded.config["epochs"] == 1       # from the config file
        assert loaded.config["seed"] == 42        # flag wins

    def test_bad_config_key_fails_cleanly(self, trained, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"warp_drive": True}))
        code = run(["train", "--dataset", str(trained["corpus"]),
                    "--out", str(tmp_path / "c.json"), "--config", str(cfg),
                    "--quiet"])
        assert code == 1
        assert "warp_drive" in capsys.readouterr().err
