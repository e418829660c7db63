"""Training objectives: reconstruction, KL, seed cross-entropy with
topic matching/merging, and embedding-aware negative sampling.

All seed-related terms read word probabilities from the same decoder
topic-word matrix used for reconstruction, so one decoder evaluation per
step feeds every loss component.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from .corpus import SeedSets
from .embeddings import EmbeddingMatrix
from .model import TopicModel
from .vmf import vmf_kl_uniform_t

PROB_FLOOR = 1e-12


@dataclass
class MatchResult:
    assignments: dict[int, int]  # seed-group index -> topic index
    scores: dict[int, float]  # matching score of the chosen topic per group
    merged: list[list[int]] = field(default_factory=list)  # groups sharing a topic

    def topic_of(self, group: int) -> int:
        return self.assignments[group]


@dataclass
class NegativeSampleSet:
    samples: dict[int, list[int]]  # group index -> sampled term ids
    probabilities: dict[int, dict[int, float]]  # group -> term -> inclusion prob


def match_score_matrix(
    seeds: SeedSets,
    log_topic_word: torch.Tensor,
    include_self: bool = False,
) -> torch.Tensor:
    """Score of assigning each group to each topic: mean log-probability of
    the group's own keywords minus the max log-probability among competitor
    keywords (keywords of all other groups; optionally including the
    group's own, for fidelity experiments)."""
    n_groups = len(seeds.groups)
    n_topics = log_topic_word.shape[0]
    scores = torch.empty((n_groups, n_topics), dtype=log_topic_word.dtype)
    for gi, group in enumerate(seeds.groups):
        own = log_topic_word[:, group.keywords].mean(dim=1)
        if include_self:
            competitors = [k for g in seeds.groups for k in g.keywords]
        else:
            competitors = [
                k for gj, g in enumerate(seeds.groups) if gj != gi for k in g.keywords
            ]
        if competitors:
            penalty = log_topic_word[:, competitors].max(dim=1).values
        else:
            penalty = torch.zeros(n_topics, dtype=log_topic_word.dtype)
        scores[gi] = own - penalty
    return scores


def match_topics(seeds: SeedSets, model: TopicModel) -> MatchResult:
    """Assign each seed group its best-scoring topic; collisions merge
    groups onto one topic. Ties break toward the lowest topic index."""
    with torch.no_grad():
        log_tw = torch.log(torch.clamp(model.topic_word_matrix(), min=PROB_FLOOR))
        scores = match_score_matrix(seeds, log_tw, model.config.match_include_self)
    assignments, chosen_scores = {}, {}
    for gi in range(len(seeds.groups)):
        topic = int(torch.argmax(scores[gi]).item())  # argmax returns first max
        assignments[gi] = topic
        chosen_scores[gi] = float(scores[gi, topic].item())
    by_topic: dict[int, list[int]] = {}
    for gi, t in assignments.items():
        by_topic.setdefault(t, []).append(gi)
    merged = [sorted(gs) for gs in by_topic.values() if len(gs) > 1]
    return MatchResult(assignments=assignments, scores=chosen_scores, merged=sorted(merged))


def recon_loss(bow: torch.Tensor, recon: torch.Tensor) -> torch.Tensor:
    """Negative expected log-likelihood of the counts under the mixture,
    single-sample estimate: -sum_w bow[w] * log p(w)."""
    return -(bow * torch.log(torch.clamp(recon, min=PROB_FLOOR))).sum(dim=-1)


def kl_loss(kappa: torch.Tensor, num_topics: int) -> torch.Tensor:
    """Closed-form KL of the per-document posterior against the uniform sphere."""
    return vmf_kl_uniform_t(kappa, num_topics)


def ce_loss(
    seeds: SeedSets,
    match: MatchResult,
    log_topic_word: torch.Tensor,
) -> torch.Tensor:
    """Seed cross-entropy under the matched (not re-maximized) topics:
    -sum_s sum_{x in s} log q(x | t_s)."""
    total = log_topic_word.new_zeros(())
    for gi, group in enumerate(seeds.groups):
        t = match.topic_of(gi)
        total = total - log_topic_word[t, group.keywords].sum()
    return total


def negative_sample(
    group_index: int,
    seeds: SeedSets,
    match: MatchResult,
    model: TopicModel,
    emb: EmbeddingMatrix,
    top_n: int,
    rng: np.random.Generator,
) -> tuple[list[int], dict[int, float]]:
    """Sample negatives for one group from its matched topic's top-N words.

    Each candidate outside the group's own keywords is included
    independently with probability max over the group's seeds of
    (1 - cosine(seed, candidate)), clamped to [0, 1] (optionally halved
    instead of clamped).
    """
    group = seeds.groups[group_index]
    topic = match.topic_of(group_index)
    top = model.top_words(topic, top_n)
    seed_vecs = emb.vectors[group.keywords]  # k x E
    sampled: list[int] = []
    probs: dict[int, float] = {}
    keywords = set(group.keywords)
    for term_id, _prob in top:
        if term_id in keywords:
            continue
        cos = seed_vecs @ emb.vectors[term_id]
        p = float(np.max(1.0 - cos))
        p = p / 2.0 if model.config.ns_prob_halved else min(max(p, 0.0), 1.0)
        probs[term_id] = p
        if rng.uniform() < p:
            sampled.append(term_id)
    return sampled, probs


def draw_negative_samples(
    seeds: SeedSets,
    match: MatchResult,
    model: TopicModel,
    emb: EmbeddingMatrix,
    rng: np.random.Generator,
) -> NegativeSampleSet:
    samples, probabilities = {}, {}
    for gi in range(len(seeds.groups)):
        s, p = negative_sample(gi, seeds, match, model, emb, model.config.top_n_negatives, rng)
        samples[gi] = s
        probabilities[gi] = p
    return NegativeSampleSet(samples=samples, probabilities=probabilities)


def ns_loss(
    samples: NegativeSampleSet,
    match: MatchResult,
    log_topic_word: torch.Tensor,
) -> torch.Tensor:
    """Sum of log q(x | t_s) over sampled negatives. This term is added to
    the minimized objective, so minimization pushes those probabilities
    down. The gamma weight is applied once, in total_loss."""
    total = log_topic_word.new_zeros(())
    for gi, terms in samples.samples.items():
        if not terms:
            continue
        t = match.topic_of(gi)
        total = total + log_topic_word[t, terms].sum()
    return total


def total_loss(
    l_recon: torch.Tensor,
    l_kl: torch.Tensor,
    l_ce: torch.Tensor,
    l_ns: torch.Tensor,
    beta: float,
    gamma: float,
) -> torch.Tensor:
    """Overall objective: L_recon + L_kl + beta * L_ce + gamma * L_ns."""
    return l_recon + l_kl + beta * l_ce + gamma * l_ns
