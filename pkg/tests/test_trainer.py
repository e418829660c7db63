import json

import numpy as np
import pytest
import torch

from seedtm.corpus import SeedGroup, SeedSets, UnknownTerm
from seedtm.datasets import planted_corpus
from seedtm.embeddings import train_embeddings
from seedtm.model import ModelConfig, TopicModel
from seedtm import trainer as T


@pytest.fixture(scope="module")
def tiny_setup():
    corpus, seeds, _ = planted_corpus(n_docs=200, seed=0)
    emb = train_embeddings(corpus, dim=16, epochs=5, seed=0, batch_size=64)
    cfg = ModelConfig(num_topics=4, vocab_size=len(corpus.vocabulary), embed_dim=16)
    return corpus, seeds, emb, cfg


class TestOneCycle:
    def test_endpoints(self):
        lr, max_lr, final = 0.002, 0.01, 0.0008
        total = 101
        assert T.one_cycle_lr(0, total, lr, max_lr, final) == pytest.approx(lr)
        assert T.one_cycle_lr(50, total, lr, max_lr, final) == pytest.approx(max_lr)
        assert T.one_cycle_lr(100, total, lr, max_lr, final) == pytest.approx(final)

    def test_monotone_up_then_down(self):
        total = 41
        vals = [T.one_cycle_lr(s, total, 0.002, 0.01, 0.0008) for s in range(total)]
        peak = int(np.argmax(vals))
        assert all(b >= a for a, b in zip(vals[: peak + 1], vals[1 : peak + 1]))
        assert all(b <= a for a, b in zip(vals[peak:], vals[peak + 1 :]))
        assert max(vals) == pytest.approx(0.01)

    def test_single_step_returns_base(self):
        assert T.one_cycle_lr(0, 1, 0.003, 0.01, 0.001) == 0.003


class TestTrainConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            T.TrainConfig(epochs=0)
        with pytest.raises(ValueError):
            T.TrainConfig(lr=-1.0)

    def test_json_round_trip(self):
        cfg = T.TrainConfig(lr=0.005, epochs=7, seed=3)
        assert T.TrainConfig.from_json(cfg.to_json()) == cfg


class TestCorpusMatrix:
    def test_counts_placed(self, tiny_setup):
        corpus, *_ = tiny_setup
        X = T.corpus_matrix(corpus)
        assert X.shape == (len(corpus.documents), len(corpus.vocabulary))
        d = corpus.documents[0]
        for t, c in d.bow.items():
            assert X[0, t].item() == float(c)
        assert X.sum().item() == sum(
            c for doc in corpus.documents for c in doc.bow.values()
        )


class TestFit:
    def test_runs_and_logs(self, tiny_setup):
        corpus, seeds, emb, cfg = tiny_setup
        tcfg = T.TrainConfig(epochs=3, seed=0)
        model, log = T.fit(corpus, seeds, emb, cfg, tcfg)
        assert len(log) == 3
        for i, entry in enumerate(log):
            assert entry["epoch"] == i
            for key in ("l_recon", "l_kl", "l_ce", "l_ns", "lr", "assignments"):
                assert key in entry
            assert np.isfinite(entry["l_recon"])
        assert not model.training  # returned in eval mode

    def test_deterministic_given_seed(self, tiny_setup):
        corpus, seeds, emb, cfg = tiny_setup
        tcfg = T.TrainConfig(epochs=2, seed=7)
        m1, log1 = T.fit(corpus, seeds, emb, cfg, tcfg)
        m2, log2 = T.fit(corpus, seeds, emb, cfg, tcfg)
        assert log1 == log2
        for p1, p2 in zip(m1.state_dict().values(), m2.state_dict().values()):
            assert torch.equal(p1, p2)

    def test_different_seed_differs(self, tiny_setup):
        corpus, seeds, emb, cfg = tiny_setup
        _, log1 = T.fit(corpus, seeds, emb, cfg, T.TrainConfig(epochs=2, seed=0))
        _, log2 = T.fit(corpus, seeds, emb, cfg, T.TrainConfig(epochs=2, seed=1))
        assert log1 != log2

    def test_too_many_groups_rejected(self, tiny_setup):
        corpus, seeds, emb, cfg = tiny_setup
        small = ModelConfig(num_topics=2, vocab_size=cfg.vocab_size, embed_dim=16)
        with pytest.raises(ValueError):
            T.fit(corpus, seeds, emb, small, T.TrainConfig(epochs=1))

    def test_unknown_seed_term_rejected(self, tiny_setup):
        corpus, _, emb, cfg = tiny_setup
        bad = SeedSets([SeedGroup("x", [len(corpus.vocabulary) + 5])])
        with pytest.raises(UnknownTerm):
            T.fit(corpus, bad, emb, cfg, T.TrainConfig(epochs=1))

    # the exploding-kappa path emits numpy overflow warnings before detection
    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_detected(self, tiny_setup):
        corpus, seeds, emb, cfg = tiny_setup
        tcfg = T.TrainConfig(lr=1e4, max_lr=1e6, epochs=10, seed=0)
        with pytest.raises(T.DivergenceDetected):
            T.fit(corpus, seeds, emb, cfg, tcfg)

    def test_checkpoints_written(self, tiny_setup, tmp_path):
        corpus, seeds, emb, cfg = tiny_setup
        ckpt = tmp_path / "m.pt"
        tcfg = T.TrainConfig(
            epochs=2, seed=0, checkpoint_every=1, checkpoint_path=str(ckpt)
        )
        T.fit(corpus, seeds, emb, cfg, tcfg)
        assert ckpt.exists()
        loaded = TopicModel.load_checkpoint(str(ckpt), emb)
        assert loaded.config.num_topics == cfg.num_topics


class TestFineTune:
    def test_warm_start_continues(self, tiny_setup):
        corpus, seeds, emb, cfg = tiny_setup
        model, _ = T.fit(corpus, seeds, emb, cfg, T.TrainConfig(epochs=2, seed=0))
        before = {k: v.clone() for k, v in model.state_dict().items()}
        _, log = T.fine_tune(
            model, corpus, seeds, emb, T.TrainConfig(epochs=2, seed=0, finetune_epochs=2)
        )
        assert len(log) == 2
        changed = any(
            not torch.equal(before[k], v) for k, v in model.state_dict().items()
        )
        assert changed

    def test_vocab_size_mismatch(self, tiny_setup):
        corpus, seeds, emb, cfg = tiny_setup
        other = ModelConfig(num_topics=4, vocab_size=cfg.vocab_size + 1, embed_dim=16)

        class _V:
            terms = [f"t{i}" for i in range(cfg.vocab_size + 1)]

        from seedtm.embeddings import EmbeddingMatrix

        vecs = np.random.default_rng(0).standard_normal((cfg.vocab_size + 1, 16))
        vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
        model = TopicModel(other, EmbeddingMatrix(vectors=vecs, vocab=_V()))
        with pytest.raises(T.VocabularyMismatch):
            T.fine_tune(model, corpus, seeds, emb, T.TrainConfig())

    def test_unknown_edited_seed(self, tiny_setup):
        corpus, seeds, emb, cfg = tiny_setup
        model, _ = T.fit(corpus, seeds, emb, cfg, T.TrainConfig(epochs=1, seed=0))
        bad = SeedSets([SeedGroup("x", [len(corpus.vocabulary) + 3])])
        with pytest.raises(T.VocabularyMismatch):
            T.fine_tune(model, corpus, bad, emb, T.TrainConfig())


class TestTelemetry:
    def test_jsonl_round_trip(self, tmp_path):
        log = [{"epoch": 0, "l_recon": 1.5}, {"epoch": 1, "l_recon": 1.2}]
        p = tmp_path / "t.jsonl"
        T.save_telemetry(log, p)
        lines = [json.loads(l) for l in p.read_text().splitlines()]
        assert lines == log


@pytest.fixture(scope="module")
def graded(tiny_setup):
    corpus, seeds, emb, _ = tiny_setup
    cfg = ModelConfig(
        num_topics=4,
        vocab_size=len(corpus.vocabulary),
        embed_dim=16,
        hidden_dims=(32,),
        dropout=0.0,
    )
    model = TopicModel(cfg, emb, seed=0).double()
    X = T.corpus_matrix(corpus, dtype=torch.float64)[:20]
    return T.gradient_check(model, X, seeds, emb, coords_per_group=6)


class TestGradientCheck:
    def test_covers_all_groups(self, graded):
        assert set(graded) == {"encoder", "kappa_head", "topic_embeddings", "temperature"} - {
            "temperature"  # fixed-mode temperature has no gradient
        }

    def test_encoder_and_topics_tight(self, graded):
        assert graded["encoder"] < 1e-4
        assert graded["topic_embeddings"] < 1e-4

    def test_kappa_path_loose(self, graded):
        assert graded["kappa_head"] < 1e-2

    def test_learnable_temperature_group(self, tiny_setup):
        corpus, seeds, emb, _ = tiny_setup
        cfg = ModelConfig(
            num_topics=4,
            vocab_size=len(corpus.vocabulary),
            embed_dim=16,
            hidden_dims=(32,),
            dropout=0.0,
            temperature_mode="learnable_scalar",
        )
        model = TopicModel(cfg, emb, seed=0).double()
        X = T.corpus_matrix(corpus, dtype=torch.float64)[:10]
        rep = T.gradient_check(model, X, seeds, emb, coords_per_group=2)
        assert "temperature" in rep
        assert rep["temperature"] < 1e-4
