"""Likelihood-based classification and evaluation.

Binary decisions use the partition-free log-likelihood-ratio: dropping
log Z shifts every dataset's score by the same constant, so thresholding
and ROC analysis are unaffected. M-ary decisions need full likelihoods and
therefore use tree models, whose normalizer is closed-form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chow_liu import TreeModel, tree_log_likelihood_batch
from .model import GraphModel, PhaseDataset, unnorm_log_density_batch


@dataclass(frozen=True)
class BinaryTestResult:
    """Per-dataset LLR score with the decision at a given threshold."""

    score: float
    decision: int
    threshold: float
    label: int | None = None


def llr_score(d: PhaseDataset, m1: GraphModel, m0: GraphModel) -> float:
    """Average unnormalized log-likelihood ratio of ``d`` under m1 vs m0.

    Partition-free: valid for thresholding because the omitted log Z terms
    shift every dataset's score equally. Averaging over samples keeps
    thresholds comparable across datasets of different length.
    """
    if m1.p != d.p or m0.p != d.p:
        raise ValueError("models must share the dataset's node count")
    return float(
        np.mean(
            unnorm_log_density_batch(d.values, m1)
            - unnorm_log_density_batch(d.values, m0)
        )
    )


def binary_test(
    d: PhaseDataset, m1: GraphModel, m0: GraphModel, threshold: float = 0.0, label=None
) -> BinaryTestResult:
    score = llr_score(d, m1, m0)
    return BinaryTestResult(
        score=score, decision=int(score >= threshold), threshold=threshold, label=label
    )


def mary_scores(d: PhaseDataset, models: list[TreeModel]) -> np.ndarray:
    """Total tree log-likelihood of the dataset under each class model."""
    if len(models) < 2:
        raise ValueError("need at least 2 class models")
    if any(t.p != d.p for t in models):
        raise ValueError("models must share the dataset's node count")
    return np.array(
        [float(tree_log_likelihood_batch(d.values, t).sum()) for t in models]
    )


def mary_classify(d: PhaseDataset, models: list[TreeModel]) -> int:
    """Maximum-likelihood class; ties break to the lowest class index."""
    return int(np.argmax(mary_scores(d, models)))


@dataclass(frozen=True)
class RocCurve:
    """Threshold-swept operating points from (0, 0) to (1, 1), with the
    trapezoidal AUC (equal to the normalized rank-sum statistic, ties
    counted half)."""

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float


def roc(scores_class1, scores_class0) -> RocCurve:
    """ROC over the union of observed scores; class 1 is positive."""
    s1 = np.asarray(scores_class1, dtype=float)
    s0 = np.asarray(scores_class0, dtype=float)
    if s1.size == 0 or s0.size == 0:
        raise ValueError("both score lists must be nonempty")
    thresholds = np.unique(np.concatenate([s1, s0]))[::-1]
    tpr = np.empty(thresholds.size + 1)
    fpr = np.empty(thresholds.size + 1)
    tpr[0] = fpr[0] = 0.0
    for idx, t in enumerate(thresholds, start=1):
        tpr[idx] = np.mean(s1 >= t)
        fpr[idx] = np.mean(s0 >= t)
    auc = float(np.trapezoid(tpr, fpr))
    return RocCurve(
        fpr=fpr,
        tpr=tpr,
        thresholds=np.concatenate([[np.inf], thresholds]),
        auc=auc,
    )


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with truth on rows and prediction on columns."""

    counts: np.ndarray

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.counts) / self.counts.sum())

    def error_circular_distances(self) -> np.ndarray:
        """Circular index distance min(|a-b|, M-|a-b|) of each error cell,
        repeated by count (direction classes live on a ring)."""
        m = self.n_classes
        out = []
        for a in range(m):
            for b in range(m):
                if a != b and self.counts[a, b]:
                    dist = min(abs(a - b), m - abs(a - b))
                    out.extend([dist] * int(self.counts[a, b]))
        return np.array(out, dtype=int)


def confusion(preds, labels, n_classes: int) -> ConfusionMatrix:
    """Tally predictions against ground truth."""
    preds = np.asarray(preds, dtype=int)
    labels = np.asarray(labels, dtype=int)
    if preds.shape != labels.shape:
        raise ValueError("preds and labels must have equal length")
    if preds.size == 0:
        raise ValueError("nothing to tally")
    if np.any((preds < 0) | (preds >= n_classes)) or np.any(
        (labels < 0) | (labels >= n_classes)
    ):
        raise ValueError(f"labels/preds must lie in [0, {n_classes})")
    counts = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(counts, (labels, preds), 1)
    return ConfusionMatrix(counts=counts)
