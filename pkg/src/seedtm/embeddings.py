"""Unit-norm word embeddings trained on the target corpus.

A skip-gram-with-negative-sampling trainer where every update is followed
by projection of the word vectors back onto the unit sphere, so cosine
similarity is a plain dot product. Vectors are trained on the corpus
itself (no pretraining) and are frozen during topic-model training; the
topic trainer asserts the checksum before and after fitting.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus, Vocabulary


class DimensionMismatch(Exception):
    pass


class FileUnreadable(Exception):
    pass


@dataclass
class EmbeddingMatrix:
    vectors: np.ndarray  # V x E, rows unit-norm
    vocab: Vocabulary

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def checksum(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.vectors).tobytes()).hexdigest()

    def cosine(self, a: int, b: int) -> float:
        return float(self.vectors[a] @ self.vectors[b])

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for term, row in zip(self.vocab.terms, self.vectors):
                # shortest round-trippable form: reloads bit-identical
                f.write(term + " " + " ".join(repr(float(x)) for x in row) + "\n")


def _normalize_rows(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return m / norms


def _seeded_unit_vector(term: str, dim: int) -> np.ndarray:
    # Deterministic fallback row for terms missing from an embedding file.
    digest = hashlib.sha256(term.encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def _segment_stream(doc_terms: list[str], vocab: Vocabulary) -> list[int]:
    """Greedy longest-match segmentation so n-gram terms get trained too."""
    ids = []
    i = 0
    n = len(doc_terms)
    while i < n:
        matched = False
        for k in (3, 2):
            if i + k <= n:
                gram = "_".join(doc_terms[i : i + k])
                if gram in vocab.term_to_id:
                    ids.append(vocab.term_to_id[gram])
                    i += k
                    matched = True
                    break
        if matched:
            continue
        t = doc_terms[i]
        if t in vocab.term_to_id:
            ids.append(vocab.term_to_id[t])
        i += 1
    return ids


def train_embeddings(
    corpus: Corpus,
    token_lists: list[list[str]] | None = None,
    dim: int = 50,
    window: int = 5,
    negatives: int = 5,
    epochs: int = 10,
    lr: float = 0.05,
    seed: int = 0,
    batch_size: int = 256,
) -> EmbeddingMatrix:
    """Train sphere-projected skip-gram vectors for the corpus vocabulary.

    token_lists optionally supplies raw token strings per document (so
    bigram/trigram vocabulary entries can be matched in context); when
    absent, the stored in-vocabulary token ids are used directly.

    Deterministic given seed: pairs are generated and consumed in a fixed
    order from a dedicated generator.
    """
    vocab = corpus.vocabulary
    V = len(vocab)
    rng = np.random.default_rng(seed)
    W = _normalize_rows(rng.standard_normal((V, dim)) * 0.1)
    C = rng.standard_normal((V, dim)) * 0.01

    if token_lists is not None:
        streams = [_segment_stream(toks, vocab) for toks in token_lists]
    else:
        streams = [d.tokens for d in corpus.documents]
    streams = [s for s in streams if len(s) >= 2]

    # Unigram^(3/4) negative-sampling table.
    freq = np.zeros(V)
    for s in streams:
        np.add.at(freq, s, 1.0)
    freq = np.maximum(freq, 1.0) ** 0.75
    neg_probs = freq / freq.sum()

    centers_all, contexts_all = [], []
    for s in streams:
        arr = np.asarray(s, dtype=np.int64)
        for off in range(1, window + 1):
            if len(arr) > off:
                centers_all.append(arr[:-off])
                contexts_all.append(arr[off:])
                centers_all.append(arr[off:])
                contexts_all.append(arr[:-off])
    if not centers_all:
        return EmbeddingMatrix(vectors=_normalize_rows(W), vocab=vocab)
    centers = np.concatenate(centers_all)
    contexts = np.concatenate(contexts_all)
    n_pairs = len(centers)

    for _ in range(epochs):
        order = rng.permutation(n_pairs)
        for start in range(0, n_pairs, batch_size):
            idx = order[start : start + batch_size]
            c, o = centers[idx], contexts[idx]
            B = len(c)
            neg = rng.choice(V, size=(B, negatives), p=neg_probs)
            wc = W[c]  # B x E
            # positive pair
            pos_score = np.einsum("be,be->b", wc, C[o])
            g_pos = 1.0 / (1.0 + np.exp(-(-pos_score)))  # 1 - sigmoid(score)
            # negatives
            cn = C[neg]  # B x K x E
            neg_score = np.einsum("be,bke->bk", wc, cn)
            g_neg = 1.0 / (1.0 + np.exp(-neg_score))  # sigmoid(score)

            grad_w = g_pos[:, None] * C[o] - np.einsum("bk,bke->be", g_neg, cn)
            grad_o = g_pos[:, None] * wc
            grad_n = -g_neg[:, :, None] * wc[:, None, :]

            np.add.at(W, c, lr * grad_w)
            np.add.at(C, o, lr * grad_o)
            np.add.at(C, neg.ravel(), lr * grad_n.reshape(-1, dim))
            # project word vectors back onto the sphere after the update
            W[c] = _normalize_rows(W[c])
    return EmbeddingMatrix(vectors=_normalize_rows(W), vocab=vocab)


def load_embeddings(path: str | Path, vocab: Vocabulary, dim: int = 50) -> EmbeddingMatrix:
    """Load a text embedding file (term then floats, space-separated),
    aligned to vocabulary order. Terms absent from the file get a
    deterministic random unit vector seeded by the term string."""
    rows: dict[str, np.ndarray] = {}
    try:
        with open(path, encoding="utf-8") as f:
            for line in f:
                parts = line.rstrip("\n").split(" ")
                if len(parts) < 2:
                    continue
                term = parts[0]
                vec = np.asarray([float(x) for x in parts[1:]])
                if vec.shape[0] != dim:
                    raise DimensionMismatch(
                        f"term {term!r} has {vec.shape[0]} dims, expected {dim}"
                    )
                rows[term] = vec
    except OSError as e:
        raise FileUnreadable(str(path)) from e
    out = np.empty((len(vocab), dim))
    for i, term in enumerate(vocab.terms):
        out[i] = rows.get(term, _seeded_unit_vector(term, dim))
    return EmbeddingMatrix(vectors=_normalize_rows(out), vocab=vocab)
