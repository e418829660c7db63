"""On-disk session and corpus registry for the refinement workbench.

Layout under a workspace root:

    corpora/<corpus_id>/   vocab.tsv, bow.tsv, labels.json, embeddings.txt, meta.json
    sessions/<session_id>/ meta.json, seeds.json, events.jsonl, telemetry.jsonl,
                           checkpoint.pt, metrics.json

Seed edit history is an append-only JSONL event log; meta.json carries the
status field, so a restarted service reconstructs every session from disk.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path

import torch

from .corpus import Corpus, SeedSets, SeedGroup, Vocabulary, load_bow
from .embeddings import EmbeddingMatrix, load_embeddings
from .model import ModelConfig, TopicModel, vocabulary_hash
from .trainer import TrainConfig

STATUSES = ("created", "training", "ready", "finetuning", "failed")
_TRANSITIONS = {
    "created": {"training", "failed"},
    "training": {"ready", "failed"},
    "ready": {"finetuning", "failed"},
    "finetuning": {"ready", "failed"},
    "failed": set(),
}


class UnknownSession(Exception):
    pass


class UnknownCorpus(Exception):
    pass


class InvalidTransition(Exception):
    pass


class ConcurrentMutation(Exception):
    pass


@dataclass
class CorpusBundle:
    corpus: Corpus
    embeddings: EmbeddingMatrix
    vocab_hash: str


def register_corpus(
    root: str | Path,
    corpus_id: str,
    corpus: Corpus,
    embeddings: EmbeddingMatrix,
) -> Path:
    d = Path(root) / "corpora" / corpus_id
    d.mkdir(parents=True, exist_ok=True)
    corpus.vocabulary.save(d / "vocab.tsv")
    from .corpus import save_bow

    save_bow(corpus, d / "bow.tsv")
    labels = {doc.id: doc.label for doc in corpus.documents if doc.label is not None}
    (d / "labels.json").write_text(json.dumps(labels))
    embeddings.save(d / "embeddings.txt")
    (d / "meta.json").write_text(
        json.dumps({"embed_dim": embeddings.dim, "num_docs": len(corpus)})
    )
    return d


def load_corpus_bundle(root: str | Path, corpus_id: str) -> CorpusBundle:
    d = Path(root) / "corpora" / corpus_id
    if not d.is_dir():
        raise UnknownCorpus(corpus_id)
    vocab = Vocabulary.load(d / "vocab.tsv")
    meta = json.loads((d / "meta.json").read_text())
    labels = json.loads((d / "labels.json").read_text())
    corpus = load_bow(d / "bow.tsv", vocab, labels)
    emb = load_embeddings(d / "embeddings.txt", vocab, dim=meta["embed_dim"])
    return CorpusBundle(
        corpus=corpus, embeddings=emb, vocab_hash=vocabulary_hash(vocab.terms)
    )


class Session:
    """One refinement session: a corpus, a model, and an evolving seed set.

    Mutations are serialized behind a per-session lock; reads work on
    immutable snapshots (fresh dict copies of meta/seed state).
    """

    def __init__(self, store: "SessionStore", session_id: str):
        self.store = store
        self.id = session_id
        self.dir = store.root / "sessions" / session_id
        self.lock = threading.Lock()
        self.job: threading.Thread | None = None

    # -- persistence helpers ----------------------------------------------

    @property
    def meta_path(self) -> Path:
        return self.dir / "meta.json"

    def read_meta(self) -> dict:
        return json.loads(self.meta_path.read_text())

    def write_meta(self, meta: dict) -> None:
        tmp = self.meta_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(meta, indent=2))
        tmp.replace(self.meta_path)

    @property
    def status(self) -> str:
        return self.read_meta()["status"]

    def set_status(self, new: str, error: str | None = None) -> None:
        meta = self.read_meta()
        cur = meta["status"]
        if new not in _TRANSITIONS.get(cur, set()):
            raise InvalidTransition(f"{cur} -> {new}")
        meta["status"] = new
        if error is not None:
            meta["error"] = error
        self.write_meta(meta)

    def append_event(self, event: dict) -> None:
        event = {"ts": time.time(), **event}
        with open(self.dir / "events.jsonl", "a", encoding="utf-8") as f:
            f.write(json.dumps(event) + "\n")

    def events(self) -> list[dict]:
        path = self.dir / "events.jsonl"
        if not path.exists():
            return []
        return [json.loads(line) for line in path.read_text().splitlines() if line]

    def read_seeds_json(self) -> list[dict]:
        return json.loads((self.dir / "seeds.json").read_text())

    def write_seeds_json(self, data: list[dict]) -> None:
        (self.dir / "seeds.json").write_text(json.dumps(data, indent=2))

    def telemetry_tail(self, n: int = 20) -> list[dict]:
        path = self.dir / "telemetry.jsonl"
        if not path.exists():
            return []
        lines = path.read_text().splitlines()
        return [json.loads(line) for line in lines[-n:] if line]

    def append_telemetry(self, entries: list[dict]) -> None:
        with open(self.dir / "telemetry.jsonl", "a", encoding="utf-8") as f:
            for e in entries:
                f.write(json.dumps(e) + "\n")

    def read_metrics(self) -> dict | None:
        path = self.dir / "metrics.json"
        return json.loads(path.read_text()) if path.exists() else None

    def write_metrics(self, metrics: dict) -> None:
        (self.dir / "metrics.json").write_text(json.dumps(metrics, indent=2))

    @property
    def checkpoint_path(self) -> Path:
        return self.dir / "checkpoint.pt"

    def job_running(self) -> bool:
        return self.job is not None and self.job.is_alive()


class SessionStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        (self.root / "sessions").mkdir(parents=True, exist_ok=True)
        (self.root / "corpora").mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self._bundles: dict[str, CorpusBundle] = {}
        for d in (self.root / "sessions").iterdir():
            if d.is_dir() and (d / "meta.json").exists():
                s = Session(self, d.name)
                # a crash mid-job leaves a transient status behind
                if s.status in ("training", "finetuning"):
                    meta = s.read_meta()
                    meta["status"] = "failed"
                    meta["error"] = "service restarted during job"
                    s.write_meta(meta)
                self._sessions[d.name] = s

    def corpus_bundle(self, corpus_id: str) -> CorpusBundle:
        if corpus_id not in self._bundles:
            self._bundles[corpus_id] = load_corpus_bundle(self.root, corpus_id)
        return self._bundles[corpus_id]

    def create_session(
        self,
        corpus_id: str,
        model_cfg: ModelConfig,
        train_cfg: TrainConfig,
        seeds_json: list[dict],
    ) -> Session:
        self.corpus_bundle(corpus_id)  # validates the corpus exists
        session_id = uuid.uuid4().hex[:12]
        s = Session(self, session_id)
        s.dir.mkdir(parents=True)
        s.write_meta(
            {
                "id": session_id,
                "corpus_id": corpus_id,
                "status": "created",
                "model_config": model_cfg.to_json(),
                "train_config": train_cfg.to_json(),
            }
        )
        s.write_seeds_json(seeds_json)
        s.append_event({"type": "created", "seeds": seeds_json})
        with self._lock:
            self._sessions[session_id] = s
        return s

    def get(self, session_id: str) -> Session:
        with self._lock:
            if session_id not in self._sessions:
                raise UnknownSession(session_id)
            return self._sessions[session_id]

    def ids(self) -> list[str]:
        with self._lock:
            return sorted(self._sessions)

    def load_model(self, session: Session) -> TopicModel:
        meta = session.read_meta()
        bundle = self.corpus_bundle(meta["corpus_id"])
        return TopicModel.load_checkpoint(
            session.checkpoint_path, bundle.embeddings, bundle.vocab_hash
        )
