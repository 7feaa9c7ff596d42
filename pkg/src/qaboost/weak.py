"""Weak classifiers: fixed +/-1 predictors over a feature matrix."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


def last_letter(name: str) -> str:
    """Final alphabetic character of ``name``, lowercased ('' if none)."""
    stripped = name.strip().lower()
    for ch in reversed(stripped):
        if ch.isalpha():
            return ch
    return ""


@dataclass(frozen=True)
class ThresholdStump:
    """``polarity`` where ``x[feature] > threshold``, ``-polarity`` elsewhere."""

    feature_index: int
    threshold: float
    polarity: int = 1
    degenerate: bool = False
    kind = "threshold_stump"

    @property
    def id(self) -> str:
        return f"stump:{self.feature_index}:{self.threshold!r}:{self.polarity:+d}"

    def predict(self, X) -> np.ndarray:
        x = np.asarray(X, dtype=float)[:, self.feature_index]
        return np.where(x > self.threshold, self.polarity, -self.polarity).astype(np.int8)


@dataclass(frozen=True)
class SuffixLetter:
    """``class_sign`` for names ending in ``letter``, ``-class_sign`` otherwise."""

    letter: str
    class_sign: int
    kind = "suffix_letter"

    @property
    def id(self) -> str:
        return f"suffix:{self.letter}:{self.class_sign:+d}"

    def predict(self, X) -> np.ndarray:
        names = np.asarray(X, dtype=object)
        if names.ndim == 2:
            names = names[:, 0]
        hit = np.fromiter((last_letter(str(n)) == self.letter for n in names), dtype=bool, count=len(names))
        return np.where(hit, self.class_sign, -self.class_sign).astype(np.int8)


@dataclass(frozen=True)
class RawColumn:
    """A +/-1 feature column used directly as a vote, optionally negated."""

    column_index: int
    polarity: int = 1
    name: str | None = None
    kind = "raw_column"

    @property
    def id(self) -> str:
        return f"column:{self.column_index}:{self.polarity:+d}"

    def predict(self, X) -> np.ndarray:
        col = np.asarray(X)[:, self.column_index]
        return (self.polarity * np.where(col > 0, 1, -1)).astype(np.int8)


WeakClassifier = ThresholdStump | SuffixLetter | RawColumn


def vote_matrix(pool, X) -> np.ndarray:
    """``(rows, len(pool))`` matrix of +/-1 votes."""
    if not len(pool):
        return np.zeros((len(X), 0), dtype=np.int8)
    return np.column_stack([clf.predict(X) for clf in pool]).astype(np.int8)


_KINDS = {cls.kind: cls for cls in (ThresholdStump, SuffixLetter, RawColumn)}


def weak_to_dict(clf) -> dict:
    return {"kind": clf.kind, "id": clf.id, **asdict(clf)}


def weak_from_dict(d: dict):
    d = dict(d)
    cls = _KINDS[d.pop("kind")]
    d.pop("id", None)
    return cls(**d)
