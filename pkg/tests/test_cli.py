import json

import pytest

from seedtm.cli import _read_config, _split_configs, main
from seedtm.datasets import planted_block_texts


@pytest.fixture(scope="module")
def flow(tmp_path_factory, capfdbinary=None):
    """Full prepare -> embed -> train pipeline in a temp workspace."""
    ws = tmp_path_factory.mktemp("cli")
    texts, labels, blocks = planted_block_texts(n_docs=150, seed=0)
    data = ws / "docs.tsv"
    data.write_text("".join(f"{l}\t{t}\n" for l, t in zip(labels, texts)))
    seeds = ws / "seeds.json"
    seeds.write_text(
        json.dumps([{"label": f"class{b}", "keywords": [blocks[b][0]]} for b in range(3)])
    )
    cfg = ws / "train.cfg"
    cfg.write_text("epochs = 25\nbatch_size = 32\n# comment\nnum_topics = 4\n")
    ckpt = ws / "model.pt"

    rc = main([
        "prepare", "--workspace", str(ws), "--corpus-id", "c", "--input", str(data),
        "--min-count", "5", "--ngram-min-count", "1000000", "--dim", "16",
    ])
    assert rc == 0
    rc = main([
        "embed", "--workspace", str(ws), "--corpus-id", "c",
        "--dim", "16", "--epochs", "8", "--seed", "0",
    ])
    assert rc == 0
    rc = main([
        "train", "--workspace", str(ws), "--corpus-id", "c", "--seeds", str(seeds),
        "--checkpoint", str(ckpt), "--config", str(cfg), "--seed", "1",
        "--telemetry", str(ws / "telemetry.jsonl"),
    ])
    assert rc == 0
    return ws, seeds, ckpt


class TestConfigParsing:
    def test_read_config_types(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("epochs = 7\nlr = 0.01  # inline comment\nname = hello\nflag = true\n")
        cfg = _read_config(p)
        assert cfg == {"epochs": 7, "lr": 0.01, "name": "hello", "flag": True}

    def test_read_config_none(self):
        assert _read_config(None) == {}

    def test_split_configs(self):
        mc, tc = _split_configs({"epochs": 3, "beta": 2.0}, 100, 3, 16)
        assert tc.epochs == 3
        assert mc.beta == 2.0
        assert mc.vocab_size == 100
        assert mc.num_topics == 4  # groups + 1 default
        assert mc.embed_dim == 16

    def test_split_configs_unknown_key(self):
        with pytest.raises(ValueError):
            _split_configs({"bogus": 1}, 10, 2, 8)


class TestPipeline:
    def test_artifacts_exist(self, flow):
        ws, _, ckpt = flow
        d = ws / "corpora" / "c"
        for name in ("vocab.tsv", "bow.tsv", "labels.json", "embeddings.txt", "meta.json"):
            assert (d / name).exists(), name
        assert ckpt.exists()
        telem = [json.loads(l) for l in (ws / "telemetry.jsonl").read_text().splitlines()]
        assert len(telem) == 25
        assert telem[0]["epoch"] == 0

    def test_topics_output(self, flow, capsys):
        ws, seeds, ckpt = flow
        rc = main([
            "topics", "--workspace", str(ws), "--corpus-id", "c",
            "--checkpoint", str(ckpt), "--seeds", str(seeds), "--top", "5",
        ])
        assert rc == 0
        out = capsys.readouterr().out
        lines = [l for l in out.splitlines() if l.startswith("topic ")]
        assert len(lines) == 4
        for label in ("class0", "class1", "class2", "(unseeded)"):
            assert any(f"[{label}]" in l for l in lines)

    def test_eval_report(self, flow, capsys, tmp_path):
        ws, seeds, ckpt = flow
        out_path = tmp_path / "report.json"
        rc = main([
            "eval", "--workspace", str(ws), "--corpus-id", "c",
            "--checkpoint", str(ckpt), "--seeds", str(seeds),
            "--output", str(out_path),
        ])
        assert rc == 0
        rep = json.loads(out_path.read_text())
        assert rep["accuracy"] > 0.8
        assert set(rep["per_class"]) == {"class0", "class1", "class2"}

    def test_infer_labels(self, flow, capsys, tmp_path):
        ws, seeds, ckpt = flow
        q = tmp_path / "q.txt"
        q.write_text("block1w00 block1w01 block1w02 block1w03\n")
        rc = main([
            "infer", "--workspace", str(ws), "--corpus-id", "c",
            "--checkpoint", str(ckpt), "--seeds", str(seeds), "--input", str(q),
        ])
        assert rc == 0
        out = capsys.readouterr().out.strip()
        assert out.startswith("class1\t")

    def test_refine_writes_new_checkpoint(self, flow, tmp_path, capsys):
        ws, seeds, ckpt = flow
        edited = tmp_path / "seeds2.json"
        groups = json.loads(seeds.read_text())
        groups[0]["keywords"].append("block0w01")
        edited.write_text(json.dumps(groups))
        out_ckpt = tmp_path / "refined.pt"
        cfg = tmp_path / "ft.cfg"
        cfg.write_text("finetune_epochs = 2\nbatch_size = 32\n")
        rc = main([
            "refine", "--workspace", str(ws), "--corpus-id", "c",
            "--checkpoint", str(ckpt), "--seeds", str(edited),
            "--config", str(cfg), "--output", str(out_ckpt),
        ])
        assert rc == 0
        assert out_ckpt.exists()
        assert ckpt.read_bytes() != out_ckpt.read_bytes()


class TestErrors:
    def test_unknown_corpus_exit_1(self, tmp_path, capsys):
        rc = main([
            "embed", "--workspace", str(tmp_path), "--corpus-id", "missing",
        ])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_bad_seed_term_exit_1(self, flow, tmp_path, capsys):
        ws, _, ckpt = flow
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps([{"label": "x", "keywords": ["nosuchterm"]}]))
        rc = main([
            "eval", "--workspace", str(ws), "--corpus-id", "c",
            "--checkpoint", str(ckpt), "--seeds", str(bad),
        ])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_bad_flag_exit_2(self):
        with pytest.raises(SystemExit) as e:
            main(["train", "--no-such-flag"])
        assert e.value.code == 2

    def test_unknown_config_key_exit_1(self, flow, tmp_path, capsys):
        ws, seeds, _ = flow
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("bogus_key = 1\n")
        rc = main([
            "train", "--workspace", str(ws), "--corpus-id", "c", "--seeds", str(seeds),
            "--checkpoint", str(tmp_path / "m.pt"), "--config", str(cfg),
        ])
        assert rc == 1
        assert "unknown config keys" in capsys.readouterr().err
