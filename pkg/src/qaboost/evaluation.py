"""Metrics and cross-validation plumbing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata


class UndefinedMetricError(ValueError):
    """Raised when a metric needs both classes but sees one."""


def auc(scores, labels) -> float:
    """Area under the ROC curve via the Mann-Whitney rank statistic.

    Tied scores get average ranks, which matches the trapezoidal ROC area.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    if not np.all(np.abs(labels) == 1):
        raise ValueError("labels must be -1 or +1")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs both classes present")
    ranks = rankdata(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2
    return float(u / (n_pos * n_neg))


def auc_pairwise(scores, labels) -> float:
    """O(n^2) reference: fraction of (positive, negative) pairs ordered correctly, ties count half."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    p = scores[labels == 1]
    n = scores[labels != 1]
    if p.size == 0 or n.size == 0:
        raise UndefinedMetricError("AUC needs both classes present")
    diff = p[:, None] - n[None, :]
    return float(((diff > 0).sum() + 0.5 * (diff == 0).sum()) / diff.size)


@dataclass(frozen=True)
class FoldPlan:
    """``assignments[i]`` is the fold holding row ``i``."""

    k: int
    assignments: np.ndarray
    seed: int

    def test_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)

    def splits(self):
        for f in range(self.k):
            yield f, self.train_rows(f), self.test_rows(f)


def kfold(n: int, k: int, seed: int = 0) -> FoldPlan:
    """Shuffle rows and deal them round-robin into ``k`` folds."""
    if k < 2 or k > n:
        raise ValueError(f"need 2 <= k <= n, got k={k}, n={n}")
    order = np.random.default_rng(seed).permutation(n)
    assignments = np.empty(n, dtype=np.int64)
    assignments[order] = np.arange(n) % k
    return FoldPlan(k, assignments, seed)


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn: int
    fp: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else float("nan")

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fn": self.fn, "fp": self.fp, "tn": self.tn}


def confusion(pred, truth) -> ConfusionMatrix:
    """Counts with +1 as the positive class."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError("pred and truth differ in length")
    p, t = pred == 1, truth == 1
    return ConfusionMatrix(
        tp=int((p & t).sum()), fn=int((~p & t).sum()), fp=int((p & ~t).sum()), tn=int((~p & ~t).sum())
    )


SUMMARY_FIELDS = ("min", "q1", "median", "mean", "q3", "max", "std")


def summarize(values) -> dict[str, float]:
    """Five-number summary plus mean and sample standard deviation.

    Quartiles interpolate linearly between order statistics. A single value
    has standard deviation 0.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("cannot summarize an empty vector")
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return {
        "min": float(v.min()),
        "q1": float(q1),
        "median": float(med),
        "mean": float(v.mean()),
        "q3": float(q3),
        "max": float(v.max()),
        "std": float(v.std(ddof=1)) if v.size > 1 else 0.0,
    }
