"""End-to-end optimization: batching, Adam under a one-cycle schedule,
reparameterized sphere sampling, and warm-start fine-tuning.

Training is deterministic given (corpus, config, seed): all randomness
flows from one numpy generator plus the torch seed, and the word
embeddings are asserted frozen by checksum before and after each run.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np
import torch

from .corpus import Corpus, SeedSets, UnknownTerm
from .embeddings import EmbeddingMatrix
from . import losses as L
from .model import ModelConfig, TopicModel
from .vmf import SamplerStuck, vmf_sample_batch, vmf_sample_from_noise


class DivergenceDetected(Exception):
    """Total loss became non-finite during training."""


class VocabularyMismatch(Exception):
    pass


@dataclass
class TrainConfig:
    lr: float = 0.002
    max_lr: float = 0.01
    epochs: int = 50
    batch_size: int = 256
    seed: int = 0
    finetune_epochs: int = 10
    final_lr_factor: float = 0.04  # end-of-cycle lr = lr * factor
    checkpoint_every: int = 0  # epochs between checkpoint saves; 0 disables
    checkpoint_path: str | None = None

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.lr <= 0 or self.max_lr <= 0:
            raise ValueError("learning rates must be positive")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "TrainConfig":
        return cls(**d)


def one_cycle_lr(step: int, total_steps: int, lr: float, max_lr: float, final_lr: float) -> float:
    """Linear ramp lr -> max_lr over the first half of the steps, linear
    decay max_lr -> final_lr over the second half."""
    if total_steps <= 1:
        return lr
    half = (total_steps - 1) / 2.0
    if step <= half:
        return lr + (max_lr - lr) * (step / half)
    return max_lr - (max_lr - final_lr) * ((step - half) / (total_steps - 1 - half))


def corpus_matrix(corpus: Corpus, dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """Dense document-term count matrix (N x V)."""
    X = torch.zeros((len(corpus.documents), len(corpus.vocabulary)), dtype=dtype)
    for i, d in enumerate(corpus.documents):
        for t, c in d.bow.items():
            X[i, t] = float(c)
    return X


def _train_loop(
    model: TopicModel,
    X: torch.Tensor,
    seeds: SeedSets,
    emb: EmbeddingMatrix,
    cfg: TrainConfig,
    epochs: int,
    rng: np.random.Generator,
    log: list[dict],
    start_epoch: int = 0,
) -> None:
    n_docs = X.shape[0]
    steps_per_epoch = max(1, (n_docs + cfg.batch_size - 1) // cfg.batch_size)
    total_steps = epochs * steps_per_epoch
    opt = torch.optim.Adam(model.parameters(), lr=cfg.lr)
    final_lr = cfg.lr * cfg.final_lr_factor
    mcfg = model.config
    step = 0
    for epoch in range(epochs):
        model.train()
        order = rng.permutation(n_docs)
        sums = {"l_recon": 0.0, "l_kl": 0.0, "l_ce": 0.0, "l_ns": 0.0}
        match = None
        for start in range(0, n_docs, cfg.batch_size):
            lr_now = one_cycle_lr(step, total_steps, cfg.lr, cfg.max_lr, final_lr)
            for pg in opt.param_groups:
                pg["lr"] = lr_now
            batch = X[order[start : start + cfg.batch_size]]
            mu, kappa = model.encode(batch)
            # catch blow-ups before the rejection sampler sees non-finite kappa
            if not (torch.isfinite(mu).all() and torch.isfinite(kappa).all()):
                raise DivergenceDetected(
                    f"non-finite encoder output at epoch {epoch} step {step}"
                )
            try:
                eta = vmf_sample_batch(mu, kappa, rng)
            except SamplerStuck as e:
                # astronomically large kappa degenerates the rejection sampler
                raise DivergenceDetected(
                    f"sampler stuck at epoch {epoch} step {step} "
                    f"(max kappa {kappa.max().item():.3g})"
                ) from e
            t_d = model.temperature_apply(eta)
            topic_word = model.topic_word_matrix()
            log_tw = torch.log(torch.clamp(topic_word, min=L.PROB_FLOOR))
            recon = model.reconstruct(t_d, topic_word)

            l_recon = L.recon_loss(batch, recon).mean()
            l_kl = L.kl_loss(kappa, mcfg.num_topics).mean()
            # matching tracks the moving topic-word matrix: recompute per step
            match = L.match_topics(seeds, model)
            l_ce = L.ce_loss(seeds, match, log_tw)
            samples = L.draw_negative_samples(seeds, match, model, emb, rng)
            l_ns = L.ns_loss(samples, match, log_tw)
            loss = L.total_loss(l_recon, l_kl, l_ce, l_ns, mcfg.beta, mcfg.gamma)
            if not torch.isfinite(loss):
                raise DivergenceDetected(
                    f"non-finite loss at epoch {epoch} step {step}: "
                    f"recon={l_recon.item():.4g} kl={l_kl.item():.4g} "
                    f"ce={l_ce.item():.4g} ns={l_ns.item():.4g}"
                )
            opt.zero_grad()
            loss.backward()
            opt.step()
            step += 1
            sums["l_recon"] += l_recon.item()
            sums["l_kl"] += l_kl.item()
            sums["l_ce"] += l_ce.item()
            sums["l_ns"] += l_ns.item()
        entry = {
            "epoch": start_epoch + epoch,
            **{k: v / steps_per_epoch for k, v in sums.items()},
            "lr": lr_now,
            "assignments": {str(g): t for g, t in match.assignments.items()},
        }
        log.append(entry)
        if (
            cfg.checkpoint_every
            and cfg.checkpoint_path
            and (epoch + 1) % cfg.checkpoint_every == 0
        ):
            model.save_checkpoint(cfg.checkpoint_path)


def fit(
    corpus: Corpus,
    seeds: SeedSets,
    emb: EmbeddingMatrix,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
) -> tuple[TopicModel, list[dict]]:
    """Train a topic model from scratch; returns (model, telemetry log)."""
    seeds.validate(corpus.vocabulary)
    if len(seeds.groups) > model_cfg.num_topics:
        raise ValueError("more seed groups than topics")
    torch.manual_seed(train_cfg.seed)
    rng = np.random.default_rng(train_cfg.seed)
    model = TopicModel(model_cfg, emb, seed=train_cfg.seed)
    checksum = model.embedding_checksum()
    X = corpus_matrix(corpus)
    log: list[dict] = []
    _train_loop(model, X, seeds, emb, train_cfg, train_cfg.epochs, rng, log)
    assert model.embedding_checksum() == checksum, "word embeddings drifted during fit"
    model.eval()
    return model, log


def fine_tune(
    model: TopicModel,
    corpus: Corpus,
    edited_seeds: SeedSets,
    emb: EmbeddingMatrix,
    train_cfg: TrainConfig,
) -> tuple[TopicModel, list[dict]]:
    """Warm-start training with an edited seed set (few epochs, same loop)."""
    if len(corpus.vocabulary) != model.config.vocab_size:
        raise VocabularyMismatch(
            f"corpus vocabulary size {len(corpus.vocabulary)} != model {model.config.vocab_size}"
        )
    try:
        edited_seeds.validate(corpus.vocabulary)
    except UnknownTerm as e:
        raise VocabularyMismatch(str(e)) from e
    if len(edited_seeds.groups) > model.config.num_topics:
        raise VocabularyMismatch("more seed groups than topics")
    torch.manual_seed(train_cfg.seed + 1)
    rng = np.random.default_rng(train_cfg.seed + 1)
    checksum = model.embedding_checksum()
    X = corpus_matrix(corpus)
    log: list[dict] = []
    _train_loop(
        model, X, edited_seeds, emb, train_cfg, train_cfg.finetune_epochs, rng, log
    )
    assert model.embedding_checksum() == checksum, "word embeddings drifted during fine-tune"
    model.eval()
    return model, log


def save_telemetry(log: list[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for entry in log:
            f.write(json.dumps(entry) + "\n")


def gradient_check(
    model: TopicModel,
    X: torch.Tensor,
    seeds: SeedSets,
    emb: EmbeddingMatrix,
    epsilon: float = 1e-5,
    coords_per_group: int = 8,
    seed: int = 0,
) -> dict[str, float]:
    """Max relative error of analytic vs central finite-difference gradients
    per parameter group, with frozen sampling noise and frozen negatives.

    The model should be float64 for the stated tolerances to be meaningful.
    """
    model.eval()  # dropout off: the loss must be a deterministic function
    rng = np.random.default_rng(seed)
    B, _ = X.shape
    m = model.config.num_topics
    with torch.no_grad():
        _, kappa0 = model.encode(X)
    # frozen noise: one accepted radial draw and one tangent per document
    noise_rng = np.random.default_rng(seed + 1)
    from .vmf import _sample_radial

    z = torch.as_tensor(
        _sample_radial(kappa0.detach().numpy().astype(np.float64), m, noise_rng),
        dtype=X.dtype,
    )
    v = torch.as_tensor(noise_rng.standard_normal((B, m - 1)), dtype=X.dtype)
    v = v / torch.linalg.norm(v, dim=-1, keepdim=True)
    match0 = L.match_topics(seeds, model)
    samples0 = L.draw_negative_samples(seeds, match0, model, emb, rng)

    def loss_fn() -> torch.Tensor:
        mu, kappa = model.encode(X)
        eta = vmf_sample_from_noise(mu, kappa, z, v)
        t_d = model.temperature_apply(eta)
        topic_word = model.topic_word_matrix()
        log_tw = torch.log(torch.clamp(topic_word, min=L.PROB_FLOOR))
        recon = model.reconstruct(t_d, topic_word)
        l_recon = L.recon_loss(X, recon).mean()
        l_kl = L.kl_loss(kappa, m).mean()
        l_ce = L.ce_loss(seeds, match0, log_tw)
        l_ns = L.ns_loss(samples0, match0, log_tw)
        return L.total_loss(
            l_recon, l_kl, l_ce, l_ns, model.config.beta, model.config.gamma
        )

    loss = loss_fn()
    model.zero_grad()
    loss.backward()

    groups: dict[str, list[torch.nn.Parameter]] = {
        "encoder": [],
        "kappa_head": [],
        "topic_embeddings": [model.topic_embeddings],
        "temperature": [],
    }
    for name, p in model.named_parameters():
        if name.startswith("kappa_head"):
            groups["kappa_head"].append(p)
        elif name.startswith(("encoder", "mu_head")):
            groups["encoder"].append(p)
        elif name == "temperature":
            groups["temperature"].append(p)

    report: dict[str, float] = {}
    coord_rng = np.random.default_rng(seed + 2)
    for gname, params in groups.items():
        worst = 0.0
        tested = False
        for p in params:
            if p.grad is None:
                continue
            flat = p.detach().reshape(-1)
            n = flat.shape[0]
            for ci in coord_rng.choice(n, size=min(coords_per_group, n), replace=False):
                tested = True
                orig = flat[ci].item()
                with torch.no_grad():
                    flat[ci] = orig + epsilon
                f_plus = loss_fn().item()
                with torch.no_grad():
                    flat[ci] = orig - epsilon
                f_minus = loss_fn().item()
                with torch.no_grad():
                    flat[ci] = orig
                fd = (f_plus - f_minus) / (2.0 * epsilon)
                an = p.grad.reshape(-1)[ci].item()
                denom = max(abs(fd), abs(an), 1e-8)
                worst = max(worst, abs(fd - an) / denom)
        if tested:
            report[gname] = worst
    return report
