"""Synthetic corpus generators for fixtures, demos and desk-scale checks.

The planted-block corpus draws each document mostly from one of a few
disjoint topical word blocks plus a shared background pool, so topic
recovery has a known ground truth. The news-style generator mimics a
four-class news corpus (world / sports / business / sci-tech) with
Zipfian background vocabulary and class-specific topical words including
the canonical seed terms for each class.
"""

from __future__ import annotations

import numpy as np

from .corpus import Corpus, SeedSets, SeedGroup, build_corpus


def planted_block_texts(
    n_docs: int = 3000,
    n_blocks: int = 3,
    block_size: int = 20,
    doc_len: int = 12,
    background_size: int = 120,
    background_rate: float = 0.25,
    seed: int = 0,
) -> tuple[list[str], list[str], list[list[str]]]:
    """Documents drawn from disjoint word blocks plus shared background.

    Returns (texts, labels, blocks). Block b's words are blockB_w0..w{k}.
    """
    rng = np.random.default_rng(seed)
    blocks = [
        [f"block{b}w{i:02d}" for i in range(block_size)] for b in range(n_blocks)
    ]
    background = [f"common{i:03d}" for i in range(background_size)]
    texts, labels = [], []
    for _ in range(n_docs):
        b = int(rng.integers(n_blocks))
        words = []
        for _ in range(doc_len):
            if rng.uniform() < background_rate:
                words.append(background[int(rng.integers(background_size))])
            else:
                words.append(blocks[b][int(rng.integers(block_size))])
        texts.append(" ".join(words))
        labels.append(f"class{b}")
    return texts, labels, blocks


def planted_corpus(
    n_docs: int = 3000,
    n_blocks: int = 3,
    block_size: int = 20,
    seed: int = 0,
    **kwargs,
) -> tuple[Corpus, SeedSets, list[str]]:
    """Planted corpus with one seed keyword per block (the block's first word)."""
    texts, labels, blocks = planted_block_texts(
        n_docs=n_docs, n_blocks=n_blocks, block_size=block_size, seed=seed, **kwargs
    )
    corpus = build_corpus(texts, labels, min_count=5, ngram_min_count=10**9)
    groups = [
        SeedGroup(label=f"class{b}", keywords=[corpus.vocabulary.id_of(blocks[b][0])])
        for b in range(n_blocks)
    ]
    return corpus, SeedSets(groups=groups, provenance="planted"), texts


NEWS_CLASS_WORDS = {
    "world": [
        "government", "military", "war", "president", "election", "minister",
        "iraq", "peace", "treaty", "embassy", "diplomat", "parliament",
        "crisis", "summit", "sanctions", "rebel", "troops", "border",
        "refugee", "nation",
    ],
    "sports": [
        "basketball", "football", "athlete", "game", "team", "season",
        "coach", "champion", "league", "playoff", "score", "tournament",
        "stadium", "olympic", "striker", "inning", "victory", "defeat",
        "fans", "medal",
    ],
    "business": [
        "stock", "market", "industry", "investor", "shares", "profit",
        "earnings", "quarterly", "revenue", "merger", "trade", "economy",
        "bank", "oil", "prices", "growth", "dollar", "inflation",
        "dividend", "exports",
    ],
    "scitech": [
        "computer", "telescope", "software", "internet", "microsoft",
        "technology", "research", "scientists", "space", "satellite",
        "digital", "wireless", "browser", "processor", "robot", "genome",
        "laboratory", "innovation", "server", "network",
    ],
}

NEWS_SEED_GROUPS = [
    ("world", ["government", "military", "war"]),
    ("business", ["stock", "market", "industry"]),
    ("scitech", ["computer", "telescope", "software"]),
    ("sports", ["basketball", "football", "athlete"]),
]


def news_style_texts(
    n_docs_per_class: int = 1000,
    doc_len: int = 30,
    background_size: int = 400,
    background_rate: float = 0.45,
    seed: int = 0,
) -> tuple[list[str], list[str]]:
    """Balanced four-class news-like corpus.

    Class words follow a Zipf-like within-class distribution; background
    words are shared across classes with Zipfian frequencies, adding the
    vocabulary noise real headlines have.
    """
    rng = np.random.default_rng(seed)
    classes = list(NEWS_CLASS_WORDS)
    background = [f"word{i:04d}" for i in range(background_size)]
    bg_weights = 1.0 / np.arange(1, background_size + 1)
    bg_weights /= bg_weights.sum()
    texts, labels = [], []
    for cls in classes:
        words_cls = NEWS_CLASS_WORDS[cls]
        w = 1.0 / np.sqrt(np.arange(1, len(words_cls) + 1))
        w /= w.sum()
        for _ in range(n_docs_per_class):
            toks = []
            for _ in range(doc_len):
                if rng.uniform() < background_rate:
                    toks.append(background[int(rng.choice(background_size, p=bg_weights))])
                else:
                    toks.append(words_cls[int(rng.choice(len(words_cls), p=w))])
            texts.append(" ".join(toks))
            labels.append(cls)
    order = rng.permutation(len(texts))
    return [texts[i] for i in order], [labels[i] for i in order]


def news_style_corpus(
    n_docs_per_class: int = 1000, seed: int = 0, **kwargs
) -> tuple[Corpus, SeedSets]:
    texts, labels = news_style_texts(n_docs_per_class=n_docs_per_class, seed=seed, **kwargs)
    corpus = build_corpus(texts, labels, min_count=15, ngram_min_count=10**9)
    groups = [
        SeedGroup(label=label, keywords=[corpus.vocabulary.id_of(t) for t in terms])
        for label, terms in NEWS_SEED_GROUPS
    ]
    return corpus, SeedSets(groups=groups, provenance="canonical-news-seeds")
