"""Corpus ingestion: tokenization, vocabulary, bag-of-words, seed derivation.

Pipeline: raw text -> filtered tokens -> frequency-thresholded vocabulary
(unigrams + contiguous bigrams/trigrams) -> sparse count vectors. Seed
keyword groups can be supplied by the user or derived per class by tf-idf
on a labeled train split.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .stopwords import ENGLISH_STOPWORDS


class EmptyVocabulary(Exception):
    """No term survived frequency filtering."""


class DocumentDropped(Exception):
    """Document has fewer than the minimum in-vocabulary tokens."""


class ClassEmpty(Exception):
    """A class label has no documents in the train split."""


class UnknownTerm(Exception):
    """A seed keyword is not in the vocabulary."""


# A token is kept only if it is plain word-like after these filters.
_DIGIT_RE = re.compile(r"^\d+$")
_TIME_RE = re.compile(r"^\d{1,2}:\d{2}(:\d{2})?(am|pm)?$|^\d{1,2}(am|pm)$")
_SYMBOL_RE = re.compile(r"[^a-z0-9_']")
_STRIP_CHARS = ".,;:!?\"'`()[]{}<>"


@dataclass(frozen=True)
class TokenRules:
    stopwords: frozenset = ENGLISH_STOPWORDS
    drop_digits: bool = True
    drop_times: bool = True
    drop_symbols: bool = True
    min_token_len: int = 2


DEFAULT_RULES = TokenRules()


def tokenize(raw_text: str, rules: TokenRules = DEFAULT_RULES) -> list[str]:
    """Lowercase and split on whitespace, dropping stopwords, digit strings,
    time tokens and tokens containing symbols. Order is preserved."""
    out = []
    for tok in raw_text.lower().split():
        tok = tok.strip(_STRIP_CHARS)
        if not tok or len(tok) < rules.min_token_len:
            continue
        if rules.drop_times and _TIME_RE.match(tok):
            continue
        if rules.drop_digits and _DIGIT_RE.match(tok):
            continue
        if rules.drop_symbols and _SYMBOL_RE.search(tok):
            continue
        if tok in rules.stopwords:
            continue
        out.append(tok)
    return out


@dataclass
class Vocabulary:
    terms: list[str]
    term_to_id: dict[str, int]
    doc_freq: list[int]
    total_freq: list[int]

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.term_to_id

    def id_of(self, term: str) -> int:
        if term not in self.term_to_id:
            raise UnknownTerm(term)
        return self.term_to_id[term]

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for t, df, tf in zip(self.terms, self.doc_freq, self.total_freq):
                f.write(f"{t}\t{df}\t{tf}\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        terms, dfs, tfs = [], [], []
        with open(path, encoding="utf-8") as f:
            for line in f:
                t, df, tf = line.rstrip("\n").split("\t")
                terms.append(t)
                dfs.append(int(df))
                tfs.append(int(tf))
        return cls(terms, {t: i for i, t in enumerate(terms)}, dfs, tfs)


def _ngrams(tokens: list[str], n: int) -> list[str]:
    return ["_".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def build_vocabulary(
    docs: list[list[str]],
    min_count: int = 15,
    ngram_min_count: int = 15,
) -> Vocabulary:
    """Build a vocabulary of unigrams with total frequency > min_count plus
    contiguous bigrams/trigrams with frequency > ngram_min_count.

    Terms are ordered by descending total frequency, ties lexicographic, so
    construction is a pure function of (docs, thresholds).
    """
    if not docs:
        raise EmptyVocabulary("no documents")
    total: Counter = Counter()
    docfreq: Counter = Counter()
    for toks in docs:
        grams = list(toks) + _ngrams(toks, 2) + _ngrams(toks, 3)
        total.update(grams)
        docfreq.update(set(grams))
    kept = []
    for term, freq in total.items():
        thresh = min_count if "_" not in term else ngram_min_count
        if freq > thresh:
            kept.append(term)
    if not kept:
        raise EmptyVocabulary("no term passed the frequency thresholds")
    kept.sort(key=lambda t: (-total[t], t))
    return Vocabulary(
        terms=kept,
        term_to_id={t: i for i, t in enumerate(kept)},
        doc_freq=[docfreq[t] for t in kept],
        total_freq=[total[t] for t in kept],
    )


@dataclass
class Document:
    id: str
    tokens: list[int]
    bow: dict[int, int]
    label: str | None = None

    @property
    def length(self) -> int:
        return len(self.tokens)


def match_vocab_tokens(doc_tokens: list[str], vocab: Vocabulary) -> list[int]:
    """All in-vocabulary term ids of a token list: unigrams in order, then
    matched contiguous bigrams and trigrams."""
    ids = [vocab.term_to_id[t] for t in doc_tokens if t in vocab.term_to_id]
    for n in (2, 3):
        for g in _ngrams(doc_tokens, n):
            if g in vocab.term_to_id:
                ids.append(vocab.term_to_id[g])
    return ids


def bow_encode(
    doc_tokens: list[str],
    vocab: Vocabulary,
    doc_id: str = "",
    label: str | None = None,
    min_tokens: int = 2,
) -> Document:
    """Encode a token list as sparse counts over the vocabulary.

    Raises DocumentDropped when fewer than min_tokens unigrams are
    in-vocabulary (short documents carry no usable signal).
    """
    n_unigrams = sum(1 for t in doc_tokens if t in vocab.term_to_id)
    if n_unigrams < min_tokens:
        raise DocumentDropped(doc_id or " ".join(doc_tokens[:5]))
    ids = match_vocab_tokens(doc_tokens, vocab)
    return Document(id=doc_id, tokens=ids, bow=dict(Counter(ids)), label=label)


@dataclass
class Corpus:
    documents: list[Document]
    vocabulary: Vocabulary
    train_ids: set[str] | None = None

    def __len__(self) -> int:
        return len(self.documents)

    def train_documents(self) -> list[Document]:
        if self.train_ids is None:
            return self.documents
        return [d for d in self.documents if d.id in self.train_ids]


def build_corpus(
    texts: list[str],
    labels: list[str] | None = None,
    rules: TokenRules = DEFAULT_RULES,
    min_count: int = 15,
    ngram_min_count: int = 15,
) -> Corpus:
    """Tokenize, build the vocabulary and encode every document, silently
    dropping under-length documents."""
    token_lists = [tokenize(t, rules) for t in texts]
    vocab = build_vocabulary(token_lists, min_count, ngram_min_count)
    docs = []
    for i, toks in enumerate(token_lists):
        label = labels[i] if labels is not None else None
        try:
            docs.append(bow_encode(toks, vocab, doc_id=str(i), label=label))
        except DocumentDropped:
            continue
    return Corpus(documents=docs, vocabulary=vocab)


@dataclass
class SeedGroup:
    label: str
    keywords: list[int]


@dataclass
class SeedSets:
    groups: list[SeedGroup]
    provenance: str = "user"

    def __len__(self) -> int:
        return len(self.groups)

    def validate(self, vocab: Vocabulary) -> None:
        if not self.groups:
            raise ValueError("seed sets must contain at least one group")
        for g in self.groups:
            if not g.keywords:
                raise ValueError(f"seed group {g.label!r} has no keywords")
            for k in g.keywords:
                if not (0 <= k < len(vocab)):
                    raise UnknownTerm(f"term id {k} outside vocabulary")

    def to_json(self, vocab: Vocabulary) -> list[dict]:
        return [
            {"label": g.label, "keywords": [vocab.terms[k] for k in g.keywords]}
            for g in self.groups
        ]

    @classmethod
    def from_json(cls, data: list[dict], vocab: Vocabulary, provenance: str = "user") -> "SeedSets":
        groups = []
        for entry in data:
            kws = [vocab.id_of(t) for t in entry["keywords"]]
            groups.append(SeedGroup(label=entry["label"], keywords=kws))
        return cls(groups=groups, provenance=provenance)

    def save(self, path: str | Path, vocab: Vocabulary) -> None:
        Path(path).write_text(json.dumps(self.to_json(vocab), indent=2))

    @classmethod
    def load(cls, path: str | Path, vocab: Vocabulary) -> "SeedSets":
        return cls.from_json(json.loads(Path(path).read_text()), vocab)


def derive_seed_keywords(corpus: Corpus, top_k: int = 3) -> SeedSets:
    """Top-k terms per class by tf-idf over the labeled train split.

    tf is the raw term count in the class's concatenated documents; idf is
    log(N / (df + 1)) over the split. Ties break by term id.
    """
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    train = corpus.train_documents()
    labeled = [d for d in train if d.label is not None]
    classes = sorted({d.label for d in labeled})
    if not classes:
        raise ClassEmpty("train split carries no labels")
    n_docs = len(labeled)
    df: Counter = Counter()
    for d in labeled:
        df.update(d.bow.keys())
    groups = []
    for cls_label in classes:
        cls_docs = [d for d in labeled if d.label == cls_label]
        if not cls_docs:
            raise ClassEmpty(cls_label)
        tf: Counter = Counter()
        for d in cls_docs:
            tf.update(d.bow)
        scored = sorted(
            tf.keys(),
            key=lambda t: (-tf[t] * math.log(n_docs / (df[t] + 1)), t),
        )
        groups.append(SeedGroup(label=cls_label, keywords=scored[:top_k]))
    return SeedSets(groups=groups, provenance="tfidf")


# --- plain-file corpus I/O -------------------------------------------------

def read_documents(path: str | Path) -> tuple[list[str], list[str] | None]:
    """Read a corpus file: one document per line, or TSV (label, text)."""
    texts, labels = [], []
    has_labels = None
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            if has_labels is None:
                has_labels = "\t" in line
            if has_labels:
                label, text = line.split("\t", 1)
                labels.append(label)
                texts.append(text)
            else:
                texts.append(line)
    return texts, (labels if has_labels else None)


def save_bow(corpus: Corpus, path: str | Path) -> None:
    """Sparse triplet format: doc_id <TAB> term_id <TAB> count, one per line."""
    with open(path, "w", encoding="utf-8") as f:
        for d in corpus.documents:
            for term_id in sorted(d.bow):
                f.write(f"{d.id}\t{term_id}\t{d.bow[term_id]}\n")


def load_bow(path: str | Path, vocab: Vocabulary, labels: dict[str, str] | None = None) -> Corpus:
    per_doc: dict[str, dict[int, int]] = {}
    order: list[str] = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            doc_id, term_id, count = line.rstrip("\n").split("\t")
            if doc_id not in per_doc:
                per_doc[doc_id] = {}
                order.append(doc_id)
            per_doc[doc_id][int(term_id)] = int(count)
    docs = []
    for doc_id in order:
        bow = per_doc[doc_id]
        tokens = [t for t, c in bow.items() for _ in range(c)]
        label = labels.get(doc_id) if labels else None
        docs.append(Document(id=doc_id, tokens=tokens, bow=bow, label=label))
    return Corpus(documents=docs, vocabulary=vocab)
