"""Command-line interface.

Commands: prepare (corpus -> vocabulary + bag-of-words registry entry),
embed (train corpus embeddings), train, topics, refine, eval, infer and
serve. Module errors exit 1 with a message; bad flags exit 2.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import torch

from . import losses as L
from .corpus import (
    Corpus,
    SeedSets,
    Vocabulary,
    build_corpus,
    load_bow,
    read_documents,
    tokenize,
)
from .embeddings import load_embeddings, train_embeddings
from .evaluate import classify_batch, evaluate_model
from .model import ModelConfig, TopicModel, vocabulary_hash
from .sessions import load_corpus_bundle, register_corpus
from .trainer import TrainConfig, corpus_matrix, fine_tune, fit, save_telemetry


def _read_config(path: str | None) -> dict:
    """Config file: one `key = value` per line, `#` comments allowed."""
    if path is None:
        return {}
    out: dict = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def _split_configs(cfg: dict, vocab_size: int, num_groups: int, embed_dim: int):
    model_keys = {f.name for f in ModelConfig.__dataclass_fields__.values()}
    train_keys = {f.name for f in TrainConfig.__dataclass_fields__.values()}
    mc = {k: v for k, v in cfg.items() if k in model_keys}
    tc = {k: v for k, v in cfg.items() if k in train_keys}
    unknown = set(cfg) - model_keys - train_keys
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    mc.setdefault("vocab_size", vocab_size)
    mc.setdefault("embed_dim", embed_dim)
    mc.setdefault("num_topics", num_groups + 1)
    return ModelConfig.from_json(mc), TrainConfig.from_json(tc)


def cmd_prepare(args) -> None:
    texts, labels = read_documents(args.input)
    corpus = build_corpus(
        texts, labels, min_count=args.min_count, ngram_min_count=args.ngram_min_count
    )
    out = Path(args.workspace) / "corpora" / args.corpus_id
    out.mkdir(parents=True, exist_ok=True)
    corpus.vocabulary.save(out / "vocab.tsv")
    from .corpus import save_bow

    save_bow(corpus, out / "bow.tsv")
    (out / "labels.json").write_text(
        json.dumps({d.id: d.label for d in corpus.documents if d.label is not None})
    )
    (out / "meta.json").write_text(
        json.dumps({"embed_dim": args.dim, "num_docs": len(corpus)})
    )
    # raw token lists let the embedding trainer see n-gram contexts
    (out / "tokens.jsonl").open("w").writelines(
        json.dumps(tokenize(t)) + "\n" for t in texts
    )
    print(
        f"prepared corpus {args.corpus_id!r}: {len(corpus)} documents, "
        f"{len(corpus.vocabulary)} terms"
    )


def cmd_embed(args) -> None:
    d = Path(args.workspace) / "corpora" / args.corpus_id
    vocab = Vocabulary.load(d / "vocab.tsv")
    labels = json.loads((d / "labels.json").read_text())
    corpus = load_bow(d / "bow.tsv", vocab, labels)
    token_lists = None
    tokens_path = d / "tokens.jsonl"
    if tokens_path.exists():
        token_lists = [json.loads(line) for line in tokens_path.read_text().splitlines()]
    emb = train_embeddings(
        corpus,
        token_lists=token_lists,
        dim=args.dim,
        window=args.window,
        negatives=args.negatives,
        epochs=args.epochs,
        seed=args.seed,
    )
    emb.save(d / "embeddings.txt")
    print(f"trained {emb.vectors.shape[0]} x {emb.dim} embeddings")


def _load_bundle(args):
    return load_corpus_bundle(args.workspace, args.corpus_id)


def _load_seeds(path: str, vocab: Vocabulary) -> SeedSets:
    return SeedSets.load(path, vocab)


def cmd_train(args) -> None:
    bundle = _load_bundle(args)
    seeds = _load_seeds(args.seeds, bundle.corpus.vocabulary)
    cfg = _read_config(args.config)
    model_cfg, train_cfg = _split_configs(
        cfg, len(bundle.corpus.vocabulary), len(seeds.groups), bundle.embeddings.dim
    )
    if args.seed is not None:
        train_cfg.seed = args.seed
    model, log = fit(bundle.corpus, seeds, bundle.embeddings, model_cfg, train_cfg)
    model.save_checkpoint(args.checkpoint, bundle.vocab_hash)
    if args.telemetry:
        save_telemetry(log, args.telemetry)
    print(f"trained {train_cfg.epochs} epochs; checkpoint -> {args.checkpoint}")


def cmd_topics(args) -> None:
    bundle = _load_bundle(args)
    model = TopicModel.load_checkpoint(args.checkpoint, bundle.embeddings, bundle.vocab_hash)
    vocab = bundle.corpus.vocabulary
    seeds = _load_seeds(args.seeds, vocab) if args.seeds else None
    assignments = {}
    if seeds is not None:
        match = L.match_topics(seeds, model)
        assignments = {t: gi for gi, t in match.assignments.items()}
    for t in range(model.config.num_topics):
        label = seeds.groups[assignments[t]].label if t in assignments else "(unseeded)"
        words = ", ".join(vocab.terms[i] for i, _ in model.top_words(t, args.top))
        print(f"topic {t} [{label}]: {words}")


def cmd_refine(args) -> None:
    bundle = _load_bundle(args)
    model = TopicModel.load_checkpoint(args.checkpoint, bundle.embeddings, bundle.vocab_hash)
    seeds = _load_seeds(args.seeds, bundle.corpus.vocabulary)
    cfg = _read_config(args.config)
    _, train_cfg = _split_configs(
        cfg, len(bundle.corpus.vocabulary), len(seeds.groups), bundle.embeddings.dim
    )
    if args.seed is not None:
        train_cfg.seed = args.seed
    model, log = fine_tune(model, bundle.corpus, seeds, bundle.embeddings, train_cfg)
    out = args.output or args.checkpoint
    model.save_checkpoint(out, bundle.vocab_hash)
    if args.telemetry:
        save_telemetry(log, args.telemetry)
    print(f"fine-tuned {train_cfg.finetune_epochs} epochs; checkpoint -> {out}")


def cmd_eval(args) -> None:
    bundle = _load_bundle(args)
    model = TopicModel.load_checkpoint(args.checkpoint, bundle.embeddings, bundle.vocab_hash)
    seeds = _load_seeds(args.seeds, bundle.corpus.vocabulary)
    match = L.match_topics(seeds, model)
    labeled = [d for d in bundle.corpus.documents if d.label is not None]
    if not labeled:
        raise ValueError("corpus has no labels to evaluate against")
    X = corpus_matrix(bundle.corpus)
    mask = [i for i, d in enumerate(bundle.corpus.documents) if d.label is not None]
    rep = evaluate_model(
        X[mask],
        [bundle.corpus.documents[i].label for i in mask],
        model,
        match,
        [g.label for g in seeds.groups],
    )
    out = json.dumps(rep.to_json(), indent=2)
    if args.output:
        Path(args.output).write_text(out)
    print(out)


def cmd_infer(args) -> None:
    bundle = _load_bundle(args)
    model = TopicModel.load_checkpoint(args.checkpoint, bundle.embeddings, bundle.vocab_hash)
    vocab = bundle.corpus.vocabulary
    seeds = _load_seeds(args.seeds, vocab)
    match = L.match_topics(seeds, model)
    texts, _ = read_documents(args.input)
    X = torch.zeros((len(texts), len(vocab)))
    for i, text in enumerate(texts):
        for tok in tokenize(text):
            if tok in vocab:
                X[i, vocab.term_to_id[tok]] += 1.0
    labels, _ = classify_batch(X, model, match, [g.label for g in seeds.groups])
    for text, label in zip(texts, labels):
        print(f"{label}\t{text[:70]}")


def cmd_serve(args) -> None:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(args.workspace), host=args.host, port=args.port)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="seedtm", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, checkpoint=True, seeds=True):
        sp.add_argument("--workspace", default="workspace", help="workspace root directory")
        sp.add_argument("--corpus-id", required=True)
        if checkpoint:
            sp.add_argument("--checkpoint", required=True)
        if seeds:
            sp.add_argument("--seeds", required=True, help="seed-set JSON file")

    sp = sub.add_parser("prepare", help="build vocabulary and bag-of-words files")
    sp.add_argument("--workspace", default="workspace")
    sp.add_argument("--corpus-id", required=True)
    sp.add_argument("--input", required=True, help="one doc per line, or TSV label<TAB>text")
    sp.add_argument("--min-count", type=int, default=15)
    sp.add_argument("--ngram-min-count", type=int, default=15)
    sp.add_argument("--dim", type=int, default=50)
    sp.set_defaults(func=cmd_prepare)

    sp = sub.add_parser("embed", help="train corpus word embeddings")
    sp.add_argument("--workspace", default="workspace")
    sp.add_argument("--corpus-id", required=True)
    sp.add_argument("--dim", type=int, default=50)
    sp.add_argument("--window", type=int, default=5)
    sp.add_argument("--negatives", type=int, default=5)
    sp.add_argument("--epochs", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_embed)

    sp = sub.add_parser("train", help="train a topic model")
    common(sp)
    sp.add_argument("--config", help="key = value config file")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--telemetry", help="write JSONL training log here")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("topics", help="print top words per topic")
    common(sp, seeds=False)
    sp.add_argument("--seeds", help="seed-set JSON for match labels")
    sp.add_argument("--top", type=int, default=10)
    sp.set_defaults(func=cmd_topics)

    sp = sub.add_parser("refine", help="warm-start fine-tune with edited seeds")
    common(sp)
    sp.add_argument("--config")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--output", help="output checkpoint (default: overwrite input)")
    sp.add_argument("--telemetry")
    sp.set_defaults(func=cmd_refine)

    sp = sub.add_parser("eval", help="evaluate classification metrics")
    common(sp)
    sp.add_argument("--output", help="write the report JSON here")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("infer", help="classify documents from a file")
    common(sp)
    sp.add_argument("--input", required=True)
    sp.set_defaults(func=cmd_infer)

    sp = sub.add_parser("serve", help="start the HTTP workbench service")
    sp.add_argument("--workspace", default="workspace")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    sp.set_defaults(func=cmd_serve)

    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except Exception as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
