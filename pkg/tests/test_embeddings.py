import numpy as np
import pytest

from seedtm.corpus import build_corpus
from seedtm.embeddings import (
    DimensionMismatch,
    load_embeddings,
    train_embeddings,
)


@pytest.fixture(scope="module")
def planted_cooccurrence():
    # "cat kitten" always co-occur; "stock" lives in separate documents
    texts = ["cat kitten purr soft"] * 40 + ["stock market profit trade"] * 40
    return build_corpus(texts, min_count=5, ngram_min_count=10**9)


@pytest.fixture(scope="module")
def trained(planted_cooccurrence):
    return train_embeddings(planted_cooccurrence, dim=16, epochs=20, lr=0.03, seed=3, batch_size=64)


def test_cooccurring_words_closer(planted_cooccurrence, trained):
    v = planted_cooccurrence.vocabulary
    cat, kitten, stock = v.id_of("cat"), v.id_of("kitten"), v.id_of("stock")
    assert trained.cosine(cat, kitten) > trained.cosine(cat, stock)


def test_rows_unit_norm(trained):
    norms = np.linalg.norm(trained.vectors, axis=1)
    assert np.allclose(norms, 1.0, atol=1e-6)


def test_deterministic_given_seed(planted_cooccurrence):
    a = train_embeddings(planted_cooccurrence, dim=8, epochs=2, seed=7)
    b = train_embeddings(planted_cooccurrence, dim=8, epochs=2, seed=7)
    assert np.array_equal(a.vectors, b.vectors)


def test_cosine_symmetric_and_self(trained):
    assert trained.cosine(0, 0) == pytest.approx(1.0, abs=1e-9)
    assert trained.cosine(0, 1) == trained.cosine(1, 0)


def test_cosine_matches_brute_force(trained):
    a, b = trained.vectors[0], trained.vectors[2]
    ref = float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))
    assert trained.cosine(0, 2) == pytest.approx(ref, abs=1e-12)


class TestLoadEmbeddings:
    def test_full_cover_round_trip(self, planted_cooccurrence, trained, tmp_path):
        path = tmp_path / "emb.txt"
        trained.save(path)
        loaded = load_embeddings(path, planted_cooccurrence.vocabulary, dim=16)
        assert np.allclose(loaded.vectors, trained.vectors, atol=1e-6)

    def test_missing_term_gets_seeded_random_unit_vector(
        self, planted_cooccurrence, trained, tmp_path
    ):
        v = planted_cooccurrence.vocabulary
        path = tmp_path / "partial.txt"
        lines = path.read_text() if path.exists() else None
        trained.save(path)
        # drop the "cat" row
        kept = [
            line
            for line in path.read_text().splitlines()
            if not line.startswith("cat ")
        ]
        path.write_text("\n".join(kept) + "\n")
        loaded = load_embeddings(path, v, dim=16)
        row = loaded.vectors[v.id_of("cat")]
        assert np.linalg.norm(row) == pytest.approx(1.0, abs=1e-9)
        assert not np.allclose(row, trained.vectors[v.id_of("cat")])
        # deterministic: same fallback on reload
        again = load_embeddings(path, v, dim=16)
        assert np.array_equal(again.vectors[v.id_of("cat")], row)

    def test_dimension_mismatch(self, planted_cooccurrence, trained, tmp_path):
        path = tmp_path / "emb.txt"
        trained.save(path)
        with pytest.raises(DimensionMismatch):
            load_embeddings(path, planted_cooccurrence.vocabulary, dim=17)


def test_checksum_stable(trained):
    assert trained.checksum() == trained.checksum()
