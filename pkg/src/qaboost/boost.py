"""QBoost and RQBoost.

QBoost grows a voting ensemble greedily. Each pass ranks the remaining pool
against the current residuals, cuts it into batches of ``Q`` classifiers, and
for every batch and regularization strength solves a QUBO whose minimizer
picks the batch members to add. The best pick is accepted only if it lowers
the validation error. RQBoost repeats this over random train/validation
splits and averages vote fractions into a probability.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import Literal

import networkx as nx
import numpy as np

from .chimera import (
    ChimeraGraph,
    EmbeddingError,
    build_chimera,
    clique_embed,
    heuristic_embed,
    random_defects,
    smallest_clique_graph,
)
from .datasets import LabeledDataset
from .hardware import chain_strength_sweep
from .qubo import QuboProblem, qubo_to_ising
from .solvers import IceModel, SolverConfig, brute_force_solve, simulated_anneal
from .weak import vote_matrix, weak_from_dict, weak_to_dict

TiePolicy = Literal["fixed_positive", "seeded_coin"]


class EmptyModelError(ValueError):
    """Prediction requested from a classifier with no members."""


class OracleError(RuntimeError):
    """The QUBO oracle failed; the message names the pass, batch and lambda."""


# ---------------------------------------------------------------- strong classifier


def _row_coins(X, seed: int) -> np.ndarray:
    """One reproducible +/-1 coin per row, derived from the row's content."""
    out = np.empty(len(X), dtype=np.int8)
    for i, row in enumerate(X):
        key = f"{seed}|{tuple(np.asarray(row).tolist())!r}".encode()
        out[i] = 1 if hashlib.blake2b(key, digest_size=1).digest()[0] & 1 else -1
    return out


def _resolve(vote_sum: np.ndarray, tie_policy: str, coins=None) -> np.ndarray:
    out = np.sign(vote_sum).astype(np.int8)
    ties = out == 0
    if ties.any():
        if tie_policy == "fixed_positive":
            out[ties] = 1
        else:
            out[ties] = coins[ties]
    return out


@dataclass(frozen=True)
class StrongClassifier:
    """Unweighted vote of accepted weak classifiers."""

    members: tuple = ()
    tie_policy: TiePolicy = "fixed_positive"
    tie_seed: int = 0

    def __post_init__(self):
        if self.tie_policy not in ("fixed_positive", "seeded_coin"):
            raise ValueError(f"unknown tie policy {self.tie_policy!r}")
        object.__setattr__(self, "members", tuple(self.members))

    def __len__(self):
        return len(self.members)

    def votes(self, X) -> np.ndarray:
        return vote_matrix(self.members, X)

    def vote_sum(self, X) -> np.ndarray:
        return self.votes(X).sum(axis=1, dtype=np.int64)

    def vote_fraction(self, X) -> np.ndarray:
        """Fraction of members voting +1 on each row."""
        if not self.members:
            raise EmptyModelError("strong classifier has no members")
        return (self.votes(X) == 1).mean(axis=1)

    def coins(self, X) -> np.ndarray:
        return _row_coins(X, self.tie_seed)

    def to_dict(self) -> dict:
        return {
            "members": [m.id for m in self.members],
            "member_specs": [weak_to_dict(m) for m in self.members],
            "tie_policy": self.tie_policy,
            "tie_seed": self.tie_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> StrongClassifier:
        members = tuple(weak_from_dict(m) for m in d["member_specs"])
        return cls(members, d["tie_policy"], d["tie_seed"])


def predict(strong: StrongClassifier, X) -> np.ndarray:
    """Sign of the member-vote sum per row; zero sums follow the tie policy."""
    if not strong.members:
        raise EmptyModelError("strong classifier has no members")
    coins = strong.coins(X) if strong.tie_policy == "seeded_coin" else None
    return _resolve(strong.vote_sum(X), strong.tie_policy, coins)


def residuals(train: LabeledDataset, strong: StrongClassifier, Q: int) -> np.ndarray:
    """``y_s - kappa * sum_t F_t(x_s)`` with ``kappa = 1/(len(strong) + Q)``."""
    kappa = 1.0 / (len(strong) + Q)
    y = train.labels.astype(float)
    if not strong.members:
        return y
    return y - kappa * strong.vote_sum(train.features)


# ---------------------------------------------------------------- QUBO


def qubo_from_votes(F: np.ndarray, yhat: np.ndarray, kappa: float, lam: float) -> tuple[QuboProblem, float]:
    """Batch QUBO from a ``(rows, batch)`` vote matrix.

    Expanding ``1/2 sum_s (kappa sum_j w_j F_js - yhat_s)^2 + lam sum_j w_j``
    with ``w_j^2 = w_j`` gives the coefficients below; the constant
    ``1/2 sum_s yhat_s^2`` is returned separately.
    """
    F = np.asarray(F, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    S, nb = F.shape
    if nb == 0:
        raise ValueError("empty batch")
    h = 0.5 * kappa**2 * S - kappa * (F.T @ yhat) + lam
    G = kappa**2 * (F.T @ F)
    iu, ju = np.triu_indices(nb, k=1)
    quadratic = {(int(i), int(j)): float(G[i, j]) for i, j in zip(iu, ju) if G[i, j] != 0.0}
    linear = {j: float(h[j]) for j in range(nb)}
    return QuboProblem(nb, linear, quadratic), float(0.5 * yhat @ yhat)


def build_qboost_qubo(batch, train: LabeledDataset, yhat, kappa: float, lam: float) -> tuple[QuboProblem, float]:
    """QUBO whose energy plus the returned offset is the batch loss at every ``w``."""
    if not len(batch):
        raise ValueError("empty batch")
    return qubo_from_votes(vote_matrix(batch, train.features), yhat, kappa, lam)


# ---------------------------------------------------------------- oracles


@dataclass(frozen=True)
class OracleConfig:
    """Which solver minimizes the batch QUBOs.

    ``"hw"`` runs the emulated device: clique embedding on the smallest
    perfect Chimera graph that fits (or heuristic embedding when ``defects``
    is positive), ICE noise, and a chain-strength sweep. ``chain_strengths``
    are multiples of the largest logical Ising coefficient.
    """

    kind: Literal["brute", "sa", "hw"] = "sa"
    solver: SolverConfig = field(default_factory=SolverConfig)
    ice: IceModel | None = field(default_factory=IceModel)
    chain_strengths: tuple = (0.5, 1.0, 2.0)
    break_threshold: float = 0.05
    chimera_m: int | None = None
    defects: int = 0
    defect_seed: int = 0

    def __post_init__(self):
        if self.kind not in ("brute", "sa", "hw"):
            raise ValueError(f"unknown oracle {self.kind!r}")
        object.__setattr__(self, "chain_strengths", tuple(float(a) for a in self.chain_strengths))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["chain_strengths"] = list(self.chain_strengths)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> OracleConfig:
        d = dict(d)
        if "solver" in d:
            d["solver"] = SolverConfig.from_dict(d["solver"])
        if "ice" in d and d["ice"] is not None:
            d["ice"] = IceModel(**d["ice"])
        if "chain_strengths" in d:
            d["chain_strengths"] = tuple(d["chain_strengths"])
        return cls(**d)


class Oracle:
    """Callable ``(qubo, seed) -> (bits, info)`` built from an :class:`OracleConfig`."""

    def __init__(self, cfg: OracleConfig):
        self.cfg = cfg
        self._embeddings: dict[int, tuple[ChimeraGraph, object]] = {}

    def _hardware_for(self, n: int):
        if n not in self._embeddings:
            cfg = self.cfg
            if cfg.defects:
                m = cfg.chimera_m or smallest_clique_graph(n).m
                graph = random_defects(m, cfg.defects, cfg.defect_seed)
                emb = heuristic_embed(nx.complete_graph(n), graph, seed=cfg.defect_seed)
                if emb is None:
                    raise EmbeddingError(f"no embedding of K_{n} found on defective C_{m}")
            else:
                graph = build_chimera(cfg.chimera_m) if cfg.chimera_m else smallest_clique_graph(n)
                emb = clique_embed(graph, n)
            self._embeddings[n] = (graph, emb)
        return self._embeddings[n]

    def __call__(self, q: QuboProblem, seed: int) -> tuple[np.ndarray, dict]:
        cfg = self.cfg
        if cfg.kind == "brute":
            samples = brute_force_solve(q)
            return samples.states[0], {"energy": samples.lowest_energy}
        if cfg.kind == "sa":
            samples = simulated_anneal(q, cfg.solver.with_seed(seed))
            return samples.states[0], {"energy": samples.lowest_energy}
        graph, emb = self._hardware_for(q.num_vars)
        spin = qubo_to_ising(q)
        scale = spin.max_abs_coefficient() or 1.0
        grid = [a * scale for a in cfg.chain_strengths]
        sweep = chain_strength_sweep(q, graph, emb, grid, cfg.ice, cfg.solver.with_seed(seed), cfg.break_threshold)
        state, energy = sweep.samples.first
        return state, {
            "energy": energy,
            "chain_strength": sweep.chain_strength,
            "sweep_exhausted": sweep.exhausted,
            "chain_break_fraction": float(sweep.samples.chain_break_fraction[0]),
        }


# ---------------------------------------------------------------- QBoost


@dataclass(frozen=True)
class QBoostConfig:
    Q: int = 13
    lambda_grid: tuple = (0.0, 0.01, 0.1)
    max_outer_iterations: int = 10
    oracle: OracleConfig = field(default_factory=OracleConfig)
    tie_policy: TiePolicy = "fixed_positive"

    def __post_init__(self):
        if self.Q < 1:
            raise ValueError("Q must be >= 1")
        grid = tuple(float(v) for v in self.lambda_grid)
        if not grid:
            raise ValueError("lambda grid is empty")
        if any(v < 0 for v in grid):
            raise ValueError("lambda values must be nonnegative")
        if self.max_outer_iterations < 1:
            raise ValueError("max_outer_iterations must be >= 1")
        object.__setattr__(self, "lambda_grid", grid)

    def to_dict(self) -> dict:
        return {
            "Q": self.Q,
            "lambda_grid": list(self.lambda_grid),
            "max_outer_iterations": self.max_outer_iterations,
            "oracle": self.oracle.to_dict(),
            "tie_policy": self.tie_policy,
        }

    @classmethod
    def from_dict(cls, d: dict) -> QBoostConfig:
        d = dict(d)
        if "oracle" in d:
            d["oracle"] = OracleConfig.from_dict(d["oracle"])
        if "lambda_grid" in d:
            d["lambda_grid"] = tuple(d["lambda_grid"])
        return cls(**d)


@dataclass
class Trace:
    """Audit log of a QBoost run: one record per oracle call plus acceptance events."""

    records: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(self.records, indent=1)

    @property
    def oracle_calls(self) -> list[dict]:
        return [r for r in self.records if r["event"] == "oracle"]

    @property
    def acceptances(self) -> list[dict]:
        return [r for r in self.records if r["event"] in ("accept", "fallback")]


def _error(vote_sum, labels, tie_policy, coins) -> float:
    return float(np.mean(_resolve(vote_sum, tie_policy, coins) != labels))


def fit_from_votes(
    pool,
    F_train: np.ndarray,
    y_train: np.ndarray,
    F_val: np.ndarray,
    y_val: np.ndarray,
    cfg: QBoostConfig,
    seed: int = 0,
    oracle: Oracle | None = None,
    val_coins: np.ndarray | None = None,
) -> tuple[StrongClassifier, Trace]:
    """QBoost on precomputed vote matrices (columns follow ``pool``)."""
    pool = list(pool)
    P = len(pool)
    if P == 0:
        raise ValueError("weak classifier pool is empty")
    if len(y_train) == 0 or len(y_val) == 0:
        raise ValueError("training and validation sets must be nonempty")
    oracle = oracle or Oracle(cfg.oracle)
    rng = np.random.default_rng(seed)
    tie_seed = int(rng.integers(2**31))
    if cfg.tie_policy == "seeded_coin" and val_coins is None:
        raise ValueError("seeded_coin needs per-row validation coins")
    y_train = y_train.astype(float)
    chosen: list[int] = []
    train_sum = np.zeros(len(y_train))
    val_sum = np.zeros(len(y_val), dtype=np.int64)
    current = np.inf
    trace = Trace()

    for outer in range(cfg.max_outer_iterations):
        remaining = np.array([j for j in range(P) if j not in set(chosen)], dtype=np.int64)
        if remaining.size == 0:
            break
        kappa = 1.0 / (len(chosen) + cfg.Q)
        yhat = y_train - kappa * train_sum
        agreement = yhat @ F_train[:, remaining]
        shuffled = rng.permutation(remaining.size)
        order = remaining[shuffled[np.argsort(-agreement[shuffled], kind="stable")]]
        best = None
        for b, lo in enumerate(range(0, order.size, cfg.Q)):
            batch = order[lo : lo + cfg.Q]
            Fb = F_train[:, batch]
            for lam in cfg.lambda_grid:
                q, offset = qubo_from_votes(Fb, yhat, kappa, lam)
                call_seed = int(rng.integers(2**31))
                try:
                    w, info = oracle(q, call_seed)
                except Exception as exc:
                    raise OracleError(f"oracle failed in pass {outer}, batch {b}, lambda {lam}: {exc}") from exc
                picked = batch[np.asarray(w, dtype=bool)]
                if picked.size:
                    err = _error(val_sum + F_val[:, picked].sum(axis=1), y_val, cfg.tie_policy, val_coins)
                else:
                    err = current
                trace.records.append(
                    {
                        "event": "oracle",
                        "pass": outer,
                        "batch": b,
                        "lambda": lam,
                        "batch_members": [pool[j].id for j in batch],
                        "selected": [pool[j].id for j in picked],
                        "loss": float(q.energy(w) + offset),
                        "validation_error": None if np.isinf(err) else err,
                        "oracle": info,
                    }
                )
                if picked.size == 0:
                    continue
                key = (err, -lam, b)
                if best is None or key < best[0]:
                    best = (key, picked)
        if best is not None and best[0][0] < current:
            picked = best[1]
            chosen.extend(int(j) for j in picked)
            train_sum += F_train[:, picked].sum(axis=1)
            val_sum += F_val[:, picked].sum(axis=1)
            current = best[0][0]
            trace.records.append(
                {
                    "event": "accept",
                    "pass": outer,
                    "lambda": -best[0][1],
                    "members": [pool[j].id for j in picked],
                    "validation_error": current,
                }
            )
            continue
        break

    if not chosen:
        errors = [_error(F_val[:, j].astype(np.int64), y_val, cfg.tie_policy, val_coins) for j in range(P)]
        j = int(np.argmin(errors))
        chosen = [j]
        trace.records.append(
            {"event": "fallback", "members": [pool[j].id], "validation_error": errors[j]}
        )
    return StrongClassifier(tuple(pool[j] for j in chosen), cfg.tie_policy, tie_seed), trace


def qboost_train(
    pool, train: LabeledDataset, validation: LabeledDataset, cfg: QBoostConfig, seed: int = 0
) -> tuple[StrongClassifier, Trace]:
    """Greedy QBoost; deterministic given ``seed``.

    Accepted members are never removed. When no pass accepts anything, the
    single pool member with the lowest validation error is returned.
    """
    F_train = vote_matrix(pool, train.features)
    F_val = vote_matrix(pool, validation.features)
    coins = None
    if cfg.tie_policy == "seeded_coin":
        tie_seed = int(np.random.default_rng(seed).integers(2**31))
        coins = _row_coins(validation.features, tie_seed)
    return fit_from_votes(pool, F_train, train.labels, F_val, validation.labels, cfg, seed, val_coins=coins)


# ---------------------------------------------------------------- RQBoost


@dataclass(frozen=True)
class RQBoostConfig:
    resamples: int = 30
    split_fractions: tuple = (0.6, 0.2, 0.2)
    inner: QBoostConfig = field(default_factory=QBoostConfig)
    seed: int = 0

    def __post_init__(self):
        if self.resamples < 1:
            raise ValueError("resamples must be >= 1")
        fr = tuple(float(f) for f in self.split_fractions)
        if len(fr) != 3 or any(f <= 0 for f in fr) or abs(sum(fr) - 1.0) > 1e-9:
            raise ValueError("split_fractions must be three positive numbers summing to 1")
        object.__setattr__(self, "split_fractions", fr)

    def to_dict(self) -> dict:
        return {
            "resamples": self.resamples,
            "split_fractions": list(self.split_fractions),
            "inner": self.inner.to_dict(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> RQBoostConfig:
        d = dict(d)
        if "inner" in d:
            d["inner"] = QBoostConfig.from_dict(d["inner"])
        if "split_fractions" in d:
            d["split_fractions"] = tuple(d["split_fractions"])
        return cls(**d)


@dataclass(frozen=True)
class Partition:
    train: np.ndarray
    validation: np.ndarray
    holdout: np.ndarray


def partition(n: int, fractions, seed: int) -> Partition:
    """Shuffle ``n`` rows and cut them into train / validation / holdout."""
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(round(fractions[0] * n))
    n_val = int(round(fractions[1] * n))
    return Partition(perm[:n_train], perm[n_train : n_train + n_val], perm[n_train + n_val :])


@dataclass(frozen=True)
class ProbabilityModel:
    """RQBoost ensemble: one strong classifier per resample, in resample order."""

    members: tuple
    partitions: tuple = ()

    def to_dict(self) -> dict:
        return {"strong_classifiers": [s.to_dict() for s in self.members]}


def resample_seeds(seed: int, count: int) -> list[tuple[int, int]]:
    """``(partition_seed, training_seed)`` for each resample."""
    return [tuple(int(v) for v in child.generate_state(2)) for child in np.random.SeedSequence(seed).spawn(count)]


def rqboost_train(pool, data: LabeledDataset, cfg: RQBoostConfig) -> ProbabilityModel:
    """Run QBoost on ``cfg.resamples`` random splits of ``data``."""
    pool = list(pool)
    F = vote_matrix(pool, data.features)
    oracle = Oracle(cfg.inner.oracle)
    members, parts = [], []
    for r, (split_seed, train_seed) in enumerate(resample_seeds(cfg.seed, cfg.resamples)):
        part = partition(len(data), cfg.split_fractions, split_seed)
        coins = None
        if cfg.inner.tie_policy == "seeded_coin":
            tie_seed = int(np.random.default_rng(train_seed).integers(2**31))
            coins = _row_coins(data.features[part.validation], tie_seed)
        try:
            strong, _ = fit_from_votes(
                pool,
                F[part.train],
                data.labels[part.train],
                F[part.validation],
                data.labels[part.validation],
                cfg.inner,
                train_seed,
                oracle,
                coins,
            )
        except Exception as exc:
            raise RuntimeError(f"resample {r} failed: {exc}") from exc
        members.append(strong)
        parts.append(part)
    return ProbabilityModel(tuple(members), tuple(parts))


def rqboost_predict_proba(model: ProbabilityModel, X) -> np.ndarray:
    """Mean over strong classifiers of the fraction of members voting +1."""
    if not model.members:
        raise EmptyModelError("probability model has no strong classifiers")
    for r, strong in enumerate(model.members):
        if not strong.members:
            raise EmptyModelError(f"strong classifier {r} has no members")
    return np.mean([s.vote_fraction(X) for s in model.members], axis=0)
