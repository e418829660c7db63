"""Encoder, temperature-scaled topic distribution, and decoder.

The encoder MLP maps a bag-of-words vector to the parameters of a vMF
posterior (unit mean direction, positive concentration). A sphere sample
(or the mean direction at inference time) is scaled by a temperature and
softmaxed into the topic distribution. The decoder is softmax(e_t e_W^T):
topic embeddings against the frozen word embeddings, giving each topic an
explicit word distribution used for reconstruction, seed matching and
negative sampling alike.
"""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .embeddings import EmbeddingMatrix

KAPPA_FLOOR = 1e-3


class ShapeMismatch(Exception):
    pass


@dataclass
class ModelConfig:
    num_topics: int
    vocab_size: int
    embed_dim: int = 50
    hidden_dims: tuple[int, ...] = (256, 64)
    dropout: float = 0.5
    batch_norm: bool = False
    temperature_mode: str = "fixed"  # fixed | learnable_scalar | learnable_vector
    temperature_init: float = 10.0
    beta: float = 1.0
    gamma: float = 0.5
    top_n_negatives: int = 30
    # Eq-style fidelity switches, defaults follow the prose reading
    match_include_self: bool = False
    ns_prob_halved: bool = False

    def __post_init__(self):
        if not (0.0 <= self.dropout < 1.0):
            raise ValueError("dropout must be in [0, 1)")
        if self.temperature_init <= 0:
            raise ValueError("temperature_init must be positive")
        if self.temperature_mode not in ("fixed", "learnable_scalar", "learnable_vector"):
            raise ValueError(f"unknown temperature_mode {self.temperature_mode!r}")

    def to_json(self) -> dict:
        d = asdict(self)
        d["hidden_dims"] = list(self.hidden_dims)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        d["hidden_dims"] = tuple(d.get("hidden_dims", (256, 64)))
        return cls(**d)


class TopicModel(nn.Module):
    """Full topic model; the word-embedding matrix is a frozen buffer."""

    def __init__(
        self,
        config: ModelConfig,
        embeddings: EmbeddingMatrix,
        seed: int = 0,
        dtype: torch.dtype = torch.float32,
    ):
        super().__init__()
        if embeddings.vectors.shape != (config.vocab_size, config.embed_dim):
            raise ShapeMismatch(
                f"embeddings {embeddings.vectors.shape} vs config "
                f"({config.vocab_size}, {config.embed_dim})"
            )
        self.config = config
        self.embedding_ref = embeddings
        gen = torch.Generator().manual_seed(seed)

        layers: list[nn.Module] = []
        in_dim = config.vocab_size
        for h in config.hidden_dims:
            layers.append(nn.Linear(in_dim, h))
            if config.batch_norm:
                layers.append(nn.BatchNorm1d(h))
            layers.append(nn.ReLU())
            layers.append(nn.Dropout(config.dropout))
            in_dim = h
        self.encoder = nn.Sequential(*layers)
        self.mu_head = nn.Linear(in_dim, config.num_topics)
        self.kappa_head = nn.Linear(in_dim, 1)

        # fan-in-scaled uniform init, reproducible from the seed
        for mod in list(self.encoder) + [self.mu_head, self.kappa_head]:
            if isinstance(mod, nn.Linear):
                bound = 1.0 / np.sqrt(mod.in_features)
                with torch.no_grad():
                    mod.weight.uniform_(-bound, bound, generator=gen)
                    mod.bias.uniform_(-bound, bound, generator=gen)

        et = torch.randn(config.num_topics, config.embed_dim, generator=gen)
        et = et / torch.linalg.norm(et, dim=1, keepdim=True)
        self.topic_embeddings = nn.Parameter(et)

        if config.temperature_mode == "fixed":
            self.register_buffer(
                "temperature", torch.full((1,), config.temperature_init)
            )
        elif config.temperature_mode == "learnable_scalar":
            self.temperature = nn.Parameter(torch.full((1,), config.temperature_init))
        else:
            self.temperature = nn.Parameter(
                torch.full((config.num_topics,), config.temperature_init)
            )

        self.register_buffer(
            "word_embeddings",
            torch.as_tensor(embeddings.vectors, dtype=dtype),
        )
        self.to(dtype)

    # -- pieces ------------------------------------------------------------

    def encode(self, bow: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Map bag-of-words rows to (mu, kappa): mu unit-norm, kappa > 0."""
        if bow.dim() != 2 or bow.shape[1] != self.config.vocab_size:
            raise ShapeMismatch(f"expected (B, {self.config.vocab_size}), got {tuple(bow.shape)}")
        h = self.encoder(bow)
        mu_raw = self.mu_head(h)
        mu = mu_raw / torch.clamp(torch.linalg.norm(mu_raw, dim=-1, keepdim=True), min=1e-12)
        kappa = torch.nn.functional.softplus(self.kappa_head(h)).squeeze(-1) + KAPPA_FLOOR
        return mu, kappa

    def temperature_apply(self, eta: torch.Tensor) -> torch.Tensor:
        """Topic distribution: softmax of the temperature-scaled sphere sample."""
        return torch.softmax(eta * self.temperature, dim=-1)

    def topic_word_matrix(self) -> torch.Tensor:
        """T x V row-stochastic matrix softmax(e_t e_W^T)."""
        return torch.softmax(self.topic_embeddings @ self.word_embeddings.T, dim=-1)

    def reconstruct(self, t_d: torch.Tensor, topic_word: torch.Tensor | None = None) -> torch.Tensor:
        """Mixture of topic word distributions: t_d @ softmax(e_t e_W^T)."""
        if topic_word is None:
            topic_word = self.topic_word_matrix()
        return t_d @ topic_word

    def top_words(self, topic: int, n: int) -> list[tuple[int, float]]:
        """n highest-probability terms of a topic, descending, ties by id."""
        if not (0 <= topic < self.config.num_topics):
            raise IndexError(f"topic {topic} out of range")
        with torch.no_grad():
            row = self.topic_word_matrix()[topic].cpu().numpy()
        order = np.lexsort((np.arange(len(row)), -row))
        return [(int(i), float(row[i])) for i in order[:n]]

    def embedding_checksum(self) -> str:
        arr = self.word_embeddings.detach().cpu().numpy()
        return hashlib.sha256(np.ascontiguousarray(arr).tobytes()).hexdigest()

    # -- persistence -------------------------------------------------------

    CHECKPOINT_VERSION = 1

    def save_checkpoint(self, path: str | Path, vocab_hash: str = "") -> None:
        payload = {
            "version": self.CHECKPOINT_VERSION,
            "config": self.config.to_json(),
            "state": self.state_dict(),
            "vocab_hash": vocab_hash,
            "embedding_checksum": self.embedding_checksum(),
        }
        torch.save(payload, path)

    @classmethod
    def load_checkpoint(
        cls,
        path: str | Path,
        embeddings: EmbeddingMatrix,
        expected_vocab_hash: str | None = None,
    ) -> "TopicModel":
        payload = torch.load(path, weights_only=False)
        if payload.get("version") != cls.CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {payload.get('version')}")
        config = ModelConfig.from_json(payload["config"])
        model = cls(config, embeddings)
        model.load_state_dict(payload["state"])
        if expected_vocab_hash is not None and payload["vocab_hash"] != expected_vocab_hash:
            raise ValueError("checkpoint was trained on a different vocabulary")
        return model


def vocabulary_hash(terms: list[str]) -> str:
    return hashlib.sha256("\n".join(terms).encode("utf-8")).hexdigest()
