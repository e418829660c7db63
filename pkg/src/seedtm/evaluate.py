"""Topic-to-class classification and reported metrics.

Classification restricts the document's topic distribution to the topics
matched by seed groups; merged groups credit the shared topic's mass to
the group with the higher matching score. Metrics: accuracy, macro F1,
macro one-vs-rest AUC (trapezoidal), and topic diversity (unique fraction
of the pooled top-k word lists).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from .losses import MatchResult
from .model import TopicModel


class NoMatchedTopics(Exception):
    pass


class LengthMismatch(Exception):
    pass


@dataclass
class EvalReport:
    accuracy: float
    macro_f1: float
    auc_macro: float
    topic_diversity: float
    per_class: dict[str, dict[str, float]] = field(default_factory=dict)
    confusion: list[list[int]] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "auc_macro": self.auc_macro,
            "topic_diversity": self.topic_diversity,
            "per_class": self.per_class,
            "confusion": self.confusion,
            "labels": self.labels,
        }


def group_credit_order(match: MatchResult) -> dict[int, int]:
    """For topics claimed by several merged groups, the group with the
    higher matching score receives the topic's probability mass."""
    credited: dict[int, int] = {}
    for gi, topic in match.assignments.items():
        cur = credited.get(topic)
        if cur is None or match.scores[gi] > match.scores[cur]:
            credited[topic] = gi
    return credited


def topic_distribution(bow: torch.Tensor, model: TopicModel) -> torch.Tensor:
    """Deterministic inference-time topic distribution: the posterior mean
    direction is used directly (no sampling) before temperature + softmax."""
    model.eval()
    with torch.no_grad():
        mu, _ = model.encode(bow)
        return model.temperature_apply(mu)


def classify_batch(
    bow: torch.Tensor,
    model: TopicModel,
    match: MatchResult,
    group_labels: list[str],
    all_topics: bool = False,
) -> tuple[list[str], np.ndarray]:
    """Labels and per-group scores for a batch of documents.

    Scores are the matched topics' probabilities renormalized across
    groups; with all_topics=True the distribution is not restricted before
    renormalization (sensitivity-analysis rule).
    """
    if not match.assignments:
        raise NoMatchedTopics("no seed group is matched to any topic")
    t_d = topic_distribution(bow, model).cpu().numpy()
    credited = group_credit_order(match)
    n_groups = len(group_labels)
    scores = np.zeros((t_d.shape[0], n_groups))
    for topic, gi in credited.items():
        scores[:, gi] = t_d[:, topic]
    if all_topics:
        denom = t_d.sum(axis=1, keepdims=True)
    else:
        denom = scores.sum(axis=1, keepdims=True)
    denom[denom == 0] = 1.0
    scores = scores / denom
    # argmax with ties broken by the lower assigned topic index
    topic_order = np.asarray([match.assignments[g] for g in range(n_groups)])
    labels = []
    for row in scores:
        tied = np.flatnonzero(row == row.max())
        best = tied[np.argmin(topic_order[tied])]
        labels.append(group_labels[int(best)])
    return labels, scores


def _roc_auc(y_true: np.ndarray, y_score: np.ndarray) -> float:
    """Trapezoidal area under the ROC curve for one binary problem."""
    order = np.argsort(-y_score, kind="stable")
    y = y_true[order]
    s = y_score[order]
    tps = np.cumsum(y)
    fps = np.cumsum(1 - y)
    # keep only threshold boundaries (distinct scores)
    distinct = np.r_[np.where(np.diff(s))[0], len(s) - 1]
    tps, fps = tps[distinct], fps[distinct]
    P, N = tps[-1], fps[-1]
    if P == 0 or N == 0:
        return 0.5
    tpr = np.r_[0.0, tps / P]
    fpr = np.r_[0.0, fps / N]
    return float(np.trapezoid(tpr, fpr))


def compute_metrics(
    predictions: list[str],
    labels: list[str],
    scores: np.ndarray | None = None,
    class_names: list[str] | None = None,
    topic_diversity_value: float = 0.0,
) -> EvalReport:
    """Accuracy, macro F1, macro one-vs-rest AUC and the confusion matrix."""
    if len(predictions) != len(labels):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(labels)} labels")
    if class_names is None:
        class_names = sorted(set(labels) | set(predictions))
    idx = {c: i for i, c in enumerate(class_names)}
    n = len(class_names)
    confusion = np.zeros((n, n), dtype=int)
    for p, t in zip(predictions, labels):
        confusion[idx[t], idx[p]] += 1
    correct = int(np.trace(confusion))
    accuracy = correct / len(labels)
    per_class = {}
    f1s = []
    for c in class_names:
        i = idx[c]
        tp = confusion[i, i]
        fp = confusion[:, i].sum() - tp
        fn = confusion[i, :].sum() - tp
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        per_class[c] = {"precision": float(prec), "recall": float(rec), "f1": float(f1)}
        f1s.append(f1)
    macro_f1 = float(np.mean(f1s))
    auc = 0.0
    if scores is not None:
        y = np.asarray([idx[t] for t in labels])
        aucs = []
        for c in class_names:
            i = idx[c]
            if i >= scores.shape[1]:
                continue
            mask = (y == i).astype(int)
            if mask.sum() in (0, len(mask)):
                continue
            aucs.append(_roc_auc(mask, scores[:, i]))
        auc = float(np.mean(aucs)) if aucs else 0.0
    return EvalReport(
        accuracy=float(accuracy),
        macro_f1=macro_f1,
        auc_macro=auc,
        topic_diversity=topic_diversity_value,
        per_class=per_class,
        confusion=confusion.tolist(),
        labels=list(class_names),
    )


def topic_diversity(model: TopicModel, top_k: int = 25) -> float:
    """Fraction of unique terms among all topics' top-k word lists."""
    T = model.config.num_topics
    k = min(top_k, model.config.vocab_size)
    unique = set()
    for t in range(T):
        unique.update(term for term, _ in model.top_words(t, k))
    return len(unique) / (k * T)


def evaluate_model(
    corpus_matrix: torch.Tensor,
    doc_labels: list[str],
    model: TopicModel,
    match: MatchResult,
    group_labels: list[str],
    top_k: int = 25,
) -> EvalReport:
    preds, scores = classify_batch(corpus_matrix, model, match, group_labels)
    return compute_metrics(
        preds,
        doc_labels,
        scores=scores,
        class_names=group_labels,
        topic_diversity_value=topic_diversity(model, top_k),
    )
