"""Classical comparison models: penalized logistic regression and a random forest."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_expit


class ConvergenceWarning(UserWarning):
    """The logistic solver hit ``max_iter`` before the objective settled."""


# ---------------------------------------------------------------- logistic


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    intercept: float
    penalty: str
    lam: float
    objective: float = float("nan")
    iterations: int = 0
    converged: bool = True

    def decision(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.weights + self.intercept

    def to_dict(self) -> dict:
        return {
            "weights": [float(w) for w in self.weights],
            "intercept": float(self.intercept),
            "penalty": self.penalty,
            "lambda": float(self.lam),
            "objective": float(self.objective),
            "iterations": self.iterations,
            "converged": self.converged,
        }


def _check_penalty(penalty: str, lam: float) -> str:
    penalty = penalty.upper()
    if penalty not in ("L1", "L2"):
        raise ValueError(f"penalty must be L1 or L2, got {penalty!r}")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    return penalty


def _penalty_value(w, penalty, lam):
    return lam * np.abs(w).sum() if penalty == "L1" else 0.5 * lam * (w @ w)


def logistic_objective(w, b, X, y, penalty: str, lam: float) -> float:
    """Mean logistic loss plus ``lam*|w|_1`` (L1) or ``lam/2*|w|^2`` (L2); intercept unpenalized."""
    penalty = _check_penalty(penalty, lam)
    margin = y * (X @ w + b)
    return float(-log_expit(margin).mean() + _penalty_value(w, penalty, lam))


def logistic_gradient(w, b, X, y, penalty: str, lam: float) -> tuple[np.ndarray, float]:
    """Gradient of :func:`logistic_objective`; for L1 the penalty part is ``lam*sign(w)``."""
    penalty = _check_penalty(penalty, lam)
    margin = y * (X @ w + b)
    r = -y * expit(-margin) / len(y)
    gw = X.T @ r + (lam * np.sign(w) if penalty == "L1" else lam * w)
    return gw, float(r.sum())


def logistic_fit(
    X,
    y,
    penalty: str = "L2",
    lam: float = 0.01,
    tol: float = 1e-10,
    max_iter: int = 20000,
    w0=None,
    b0: float = 0.0,
) -> LogisticModel:
    """Proximal gradient descent with backtracking line search.

    Stops when one step lowers the objective by less than ``tol``. Hitting
    ``max_iter`` first emits a :class:`ConvergenceWarning` naming the final
    objective and returns the last iterate with ``converged=False``.
    """
    penalty = _check_penalty(penalty, lam)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(X)):
        raise ValueError("X must be finite")
    if not np.all(np.abs(y) == 1):
        raise ValueError("labels must be -1 or +1")
    n, p = X.shape

    def smooth(w, b):
        return float(-log_expit(y * (X @ w + b)).mean())

    def smooth_grad(w, b):
        r = -y * expit(-y * (X @ w + b)) / n
        return X.T @ r, float(r.sum())

    def prox(w, t):
        if penalty == "L1":
            return np.sign(w) * np.maximum(np.abs(w) - t * lam, 0.0)
        return w / (1.0 + t * lam)

    w = np.zeros(p) if w0 is None else np.asarray(w0, dtype=float).copy()
    b = float(b0)
    step = 1.0
    f = smooth(w, b)
    obj = f + _penalty_value(w, penalty, lam)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        gw, gb = smooth_grad(w, b)
        while True:
            w_new = prox(w - step * gw, step)
            b_new = b - step * gb
            dw, db = w_new - w, b_new - b
            f_new = smooth(w_new, b_new)
            if f_new <= f + gw @ dw + gb * db + (dw @ dw + db * db) / (2 * step) + 1e-15:
                break
            step *= 0.5
        new_obj = f_new + _penalty_value(w_new, penalty, lam)
        decrease = obj - new_obj
        w, b, f, obj = w_new, b_new, f_new, new_obj
        step *= 1.25
        if decrease < tol:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"logistic_fit did not converge in {max_iter} iterations; final objective {obj:.12g}",
            ConvergenceWarning,
            stacklevel=2,
        )
    return LogisticModel(w, b, penalty, float(lam), obj, it, converged)


def logistic_predict_proba(model: LogisticModel, X) -> np.ndarray:
    """P(label = +1) for each row of ``X`` (a single row gives a length-1 array)."""
    return expit(model.decision(np.atleast_2d(X)))


# ---------------------------------------------------------------- forest


@dataclass(frozen=True)
class Tree:
    """Array-encoded binary tree; ``left[i] == -1`` marks a leaf.

    Rows go left when ``x[feature] <= threshold``. ``counts[i]`` holds the
    (negative, positive) bootstrap counts at node ``i``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray

    @property
    def positive_fraction(self) -> np.ndarray:
        return self.counts[:, 1] / self.counts.sum(axis=1)

    def leaves(self, X) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.left[node] >= 0)
        while active.size:
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.left[node[active]] >= 0]
        return node

    def predict_proba(self, X) -> np.ndarray:
        return self.positive_fraction[self.leaves(X)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "counts": self.counts.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> Tree:
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=float),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["counts"], dtype=float).reshape(-1, 2),
        )


def _best_split(x: np.ndarray, pos: np.ndarray, weight: np.ndarray):
    """Best Gini split of one feature; returns ``(impurity, threshold)`` or ``None``."""
    order = np.argsort(x, kind="stable")
    xs, ps, ws = x[order], pos[order], weight[order]
    boundary = np.flatnonzero(xs[1:] != xs[:-1])
    if boundary.size == 0:
        return None
    cw = np.cumsum(ws)[boundary]
    cp = np.cumsum(ps)[boundary]
    total_w, total_p = ws.sum(), ps.sum()
    rw, rp = total_w - cw, total_p - cp
    gini_l = 1.0 - (cp / cw) ** 2 - ((cw - cp) / cw) ** 2
    gini_r = 1.0 - (rp / rw) ** 2 - ((rw - rp) / rw) ** 2
    score = cw * gini_l + rw * gini_r
    k = int(np.argmin(score))
    b = boundary[k]
    return float(score[k]), float((xs[b] + xs[b + 1]) / 2)


def _grow_tree(X, y, weight, mtry, max_depth, rng) -> Tree:
    pos_all = (y == 1).astype(float) * weight
    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(rows):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        w = weight[rows].sum()
        p = pos_all[rows].sum()
        counts.append((w - p, p))
        return len(feature) - 1

    root_rows = np.flatnonzero(weight > 0)
    stack = [(new_node(root_rows), root_rows, 0)]
    p_features = X.shape[1]
    while stack:
        node, rows, depth = stack.pop()
        neg, pos = counts[node]
        if neg == 0 or pos == 0 or (max_depth is not None and depth >= max_depth):
            continue
        parent = (neg + pos) * (1.0 - (pos / (neg + pos)) ** 2 - (neg / (neg + pos)) ** 2)
        best = None
        tried = 0
        for f in rng.permutation(p_features):
            if tried >= mtry and best is not None:
                break
            tried += 1
            split = _best_split(X[rows, f], pos_all[rows], weight[rows])
            if split is not None and (best is None or split[0] < best[0]):
                best = (split[0], int(f), split[1])
        if best is None or best[0] >= parent - 1e-12:
            continue
        _, f, thr = best
        mask = X[rows, f] <= thr
        feature[node], threshold[node] = f, thr
        lrows, rrows = rows[mask], rows[~mask]
        left[node] = new_node(lrows)
        right[node] = new_node(rrows)
        stack.append((right[node], rrows, depth + 1))
        stack.append((left[node], lrows, depth + 1))
    return Tree(
        np.asarray(feature, dtype=np.int64),
        np.asarray(threshold, dtype=float),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
        np.asarray(counts, dtype=float).reshape(-1, 2),
    )


@dataclass(frozen=True)
class ForestModel:
    trees: tuple
    trees_count: int
    features_per_split: int
    seed: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "trees_count": self.trees_count,
                "features_per_split": self.features_per_split,
                "seed": self.seed,
                "trees": [t.to_dict() for t in self.trees],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> ForestModel:
        d = json.loads(text)
        trees = tuple(Tree.from_dict(t) for t in d["trees"])
        return cls(trees, d["trees_count"], d["features_per_split"], d["seed"])


def forest_fit(
    X,
    y,
    trees_count: int = 500,
    max_depth: int | None = None,
    features_per_split: int | None = None,
    seed: int = 0,
) -> ForestModel:
    """Bagged Gini trees with a random feature subset tried at every node.

    ``features_per_split`` defaults to ``floor(sqrt(p))``. If none of the drawn
    features can split a node, further features are drawn until one can or
    all are exhausted. Each tree's bootstrap and feature draws come from its
    own child seed, so trees are independent of training order.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    n, p = X.shape
    if trees_count < 1:
        raise ValueError("trees_count must be positive")
    mtry = features_per_split or max(1, math.isqrt(p))
    trees = []
    for child in np.random.SeedSequence(seed).spawn(trees_count):
        rng = np.random.default_rng(child)
        weight = np.bincount(rng.integers(0, n, size=n), minlength=n).astype(float)
        trees.append(_grow_tree(X, y, weight, mtry, max_depth, rng))
    return ForestModel(tuple(trees), trees_count, mtry, seed)


def forest_predict_proba(model: ForestModel, X) -> np.ndarray:
    """Mean over trees of the leaf positive-class fraction."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.mean([t.predict_proba(X) for t in model.trees], axis=0)
