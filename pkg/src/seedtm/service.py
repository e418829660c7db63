"""HTTP workbench service for the interactive refinement loop.

Endpoints (JSON): create a session and train asynchronously, poll status
and telemetry, inspect per-topic top words with matched seed groups,
submit batched keyword edits, trigger warm-start fine-tunes, and classify
free text against the current model. Session state lives on disk via
SessionStore, so a restarted service resumes from persisted state.
"""

from __future__ import annotations

import threading
from pathlib import Path

import torch
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import losses as L
from .corpus import SeedSets, tokenize
from .evaluate import classify_batch, evaluate_model, topic_diversity
from .model import ModelConfig, TopicModel
from .sessions import (
    ConcurrentMutation,
    Session,
    SessionStore,
    UnknownCorpus,
    UnknownSession,
)
from .trainer import TrainConfig, corpus_matrix, fine_tune, fit


class CreateSessionRequest(BaseModel):
    corpus_id: str
    config: dict = Field(default_factory=dict)
    train_config: dict = Field(default_factory=dict)
    seeds: list[dict]


class KeywordEdit(BaseModel):
    group: str
    term: str


class KeywordEditRequest(BaseModel):
    add: list[KeywordEdit] = Field(default_factory=list)
    remove: list[KeywordEdit] = Field(default_factory=list)
    confirm: list[KeywordEdit] = Field(default_factory=list)
    new_groups: list[dict] = Field(default_factory=list)


class ClassifyRequest(BaseModel):
    texts: list[str]


def _seed_sets_from_json(data: list[dict], vocab) -> SeedSets:
    return SeedSets.from_json(data, vocab)


def create_app(root: str | Path) -> FastAPI:
    store = SessionStore(root)
    app = FastAPI(title="seedtm workbench")
    app.state.store = store
    model_cache: dict[str, TopicModel] = {}
    cache_lock = threading.Lock()

    def get_session(session_id: str) -> Session:
        try:
            return store.get(session_id)
        except UnknownSession:
            raise HTTPException(404, f"unknown session {session_id!r}")

    def cached_model(session: Session) -> TopicModel:
        with cache_lock:
            if session.id not in model_cache:
                model_cache[session.id] = store.load_model(session)
            return model_cache[session.id]

    def invalidate_model(session_id: str) -> None:
        with cache_lock:
            model_cache.pop(session_id, None)

    def run_training(session: Session, warm: bool) -> None:
        meta = session.read_meta()
        bundle = store.corpus_bundle(meta["corpus_id"])
        model_cfg = ModelConfig.from_json(meta["model_config"])
        train_cfg = TrainConfig.from_json(meta["train_config"])
        try:
            seeds = _seed_sets_from_json(session.read_seeds_json(), bundle.corpus.vocabulary)
            if warm:
                model = store.load_model(session)
                model, log = fine_tune(model, bundle.corpus, seeds, bundle.embeddings, train_cfg)
            else:
                model, log = fit(bundle.corpus, seeds, bundle.embeddings, model_cfg, train_cfg)
            model.save_checkpoint(session.checkpoint_path, bundle.vocab_hash)
            session.append_telemetry(log)
            match = L.match_topics(seeds, model)
            labeled = [d for d in bundle.corpus.documents if d.label is not None]
            metrics = {"topic_diversity": topic_diversity(model)}
            if labeled:
                X = corpus_matrix(bundle.corpus)
                mask = [i for i, d in enumerate(bundle.corpus.documents) if d.label is not None]
                rep = evaluate_model(
                    X[mask],
                    [bundle.corpus.documents[i].label for i in mask],
                    model,
                    match,
                    [g.label for g in seeds.groups],
                )
                metrics = rep.to_json()
            session.write_metrics(metrics)
            invalidate_model(session.id)
            session.set_status("ready")
        except Exception as e:  # job thread: persist the failure
            session.set_status("failed", error=f"{type(e).__name__}: {e}")

    def start_job(session: Session, warm: bool) -> None:
        t = threading.Thread(target=run_training, args=(session, warm), daemon=True)
        session.job = t
        t.start()

    # -- endpoints ---------------------------------------------------------

    @app.post("/sessions", status_code=201)
    def create_session(req: CreateSessionRequest):
        try:
            bundle = store.corpus_bundle(req.corpus_id)
        except UnknownCorpus:
            raise HTTPException(404, f"unknown corpus {req.corpus_id!r}")
        vocab = bundle.corpus.vocabulary
        cfg = dict(req.config)
        cfg.setdefault("vocab_size", len(vocab))
        cfg.setdefault("embed_dim", bundle.embeddings.dim)
        cfg.setdefault("num_topics", len(req.seeds) + 1)
        try:
            model_cfg = ModelConfig.from_json(cfg)
            train_cfg = TrainConfig.from_json(req.train_config)
            _seed_sets_from_json(req.seeds, vocab).validate(vocab)
        except (TypeError, ValueError) as e:
            raise HTTPException(400, str(e))
        except KeyError as e:
            raise HTTPException(400, f"missing field {e}")
        except Exception as e:
            raise HTTPException(422, str(e))
        session = store.create_session(req.corpus_id, model_cfg, train_cfg, req.seeds)
        with session.lock:
            session.set_status("training")
            start_job(session, warm=False)
        return {"session_id": session.id}

    @app.get("/sessions/{session_id}")
    def get_session_state(session_id: str):
        session = get_session(session_id)
        meta = session.read_meta()
        return {
            "id": session.id,
            "corpus_id": meta["corpus_id"],
            "status": meta["status"],
            "error": meta.get("error"),
            "seeds": session.read_seeds_json(),
            "metrics": session.read_metrics(),
            "telemetry": session.telemetry_tail(),
            "events": len(session.events()),
        }

    @app.get("/sessions/{session_id}/topics")
    def get_topics(session_id: str, top: int = 10):
        session = get_session(session_id)
        if session.status != "ready":
            raise HTTPException(409, f"session is {session.status}, not ready")
        meta = session.read_meta()
        bundle = store.corpus_bundle(meta["corpus_id"])
        vocab = bundle.corpus.vocabulary
        model = cached_model(session)
        seeds = _seed_sets_from_json(session.read_seeds_json(), vocab)
        match = L.match_topics(seeds, model)
        topics = []
        for t in range(model.config.num_topics):
            matched = sorted(
                gi for gi, topic in match.assignments.items() if topic == t
            )
            topics.append(
                {
                    "topic": t,
                    "matched_groups": [seeds.groups[g].label for g in matched],
                    "words": [
                        {"term": vocab.terms[i], "probability": p}
                        for i, p in model.top_words(t, top)
                    ],
                }
            )
        return {"topics": topics, "assignments": {str(k): v for k, v in match.assignments.items()}}

    @app.post("/sessions/{session_id}/keywords")
    def edit_keywords(session_id: str, req: KeywordEditRequest):
        session = get_session(session_id)
        if session.job_running():
            raise HTTPException(409, "a job is running for this session")
        meta = session.read_meta()
        bundle = store.corpus_bundle(meta["corpus_id"])
        vocab = bundle.corpus.vocabulary
        all_terms = (
            [e.term for e in req.add]
            + [e.term for e in req.confirm]
            + [t for g in req.new_groups for t in g.get("keywords", [])]
        )
        for term in all_terms:
            if term not in vocab:
                raise HTTPException(422, f"term {term!r} not in vocabulary")
        with session.lock:
            if session.status not in ("ready", "created"):
                raise HTTPException(409, f"session is {session.status}")
            seeds = {g["label"]: list(g["keywords"]) for g in session.read_seeds_json()}
            order = list(seeds)
            for e in req.add:
                if e.group not in seeds:
                    raise HTTPException(400, f"unknown group {e.group!r}")
                if e.term not in seeds[e.group]:
                    seeds[e.group].append(e.term)
                session.append_event({"type": "add", "group": e.group, "term": e.term})
            for e in req.remove:
                if e.group not in seeds:
                    raise HTTPException(400, f"unknown group {e.group!r}")
                if e.term in seeds[e.group]:
                    seeds[e.group].remove(e.term)
                session.append_event({"type": "remove", "group": e.group, "term": e.term})
            for e in req.confirm:
                session.append_event({"type": "confirm", "group": e.group, "term": e.term})
            for g in req.new_groups:
                label = g["label"]
                if label in seeds:
                    raise HTTPException(400, f"group {label!r} already exists")
                seeds[label] = list(g.get("keywords", []))
                order.append(label)
                session.append_event({"type": "new_group", "group": label, "keywords": seeds[label]})
            new_state = [{"label": lab, "keywords": seeds[lab]} for lab in order]
            for entry in new_state:
                if not entry["keywords"]:
                    raise HTTPException(400, f"group {entry['label']!r} would become empty")
            session.write_seeds_json(new_state)
        return {"seeds": new_state, "events": len(session.events())}

    @app.post("/sessions/{session_id}/finetune", status_code=202)
    def finetune(session_id: str):
        session = get_session(session_id)
        with session.lock:
            if session.job_running() or session.status != "ready":
                raise HTTPException(409, f"session is {session.status}")
            session.set_status("finetuning")
            start_job(session, warm=True)
        return {"status": "finetuning"}

    @app.post("/sessions/{session_id}/classify")
    def classify(session_id: str, req: ClassifyRequest):
        session = get_session(session_id)
        if session.status != "ready":
            raise HTTPException(409, f"session is {session.status}, not ready")
        meta = session.read_meta()
        bundle = store.corpus_bundle(meta["corpus_id"])
        vocab = bundle.corpus.vocabulary
        model = cached_model(session)
        seeds = _seed_sets_from_json(session.read_seeds_json(), vocab)
        match = L.match_topics(seeds, model)
        group_labels = [g.label for g in seeds.groups]
        X = torch.zeros((len(req.texts), len(vocab)))
        for i, text in enumerate(req.texts):
            for tok in tokenize(text):
                if tok in vocab:
                    X[i, vocab.term_to_id[tok]] += 1.0
        labels, scores = classify_batch(X, model, match, group_labels)
        return {
            "results": [
                {
                    "text": t,
                    "label": lab,
                    "scores": {g: float(s) for g, s in zip(group_labels, row)},
                }
                for t, lab, row in zip(req.texts, labels, scores)
            ]
        }

    return app
