"""Batch experiments: names corpus, bait matrix and synthetic seizure clips.

Each ``run_*`` function writes CSV/JSON artifacts (plus PNG figures unless
disabled) into an output directory and a ``manifest.json`` echoing the
configuration, package versions and a SHA-256 of every output.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import platform
from dataclasses import asdict, dataclass, field, replace
from importlib import metadata
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import forest_fit, forest_predict_proba, logistic_fit, logistic_predict_proba
from .boost import (
    OracleConfig,
    QBoostConfig,
    RQBoostConfig,
    partition,
    predict,
    qboost_train,
    rqboost_predict_proba,
    rqboost_train,
)
from .datasets import (
    INTERICTAL,
    PREICTAL,
    EegParams,
    FeatureConfig,
    binarize_features,
    clip_dataset,
    gen_linsep,
    gen_synthetic_eeg,
    linsep_pool,
    linsep_task,
    load_names,
    names_suffix_matrix,
    names_weak_pool,
)
from .evaluation import SUMMARY_FIELDS, auc, confusion, kfold, summarize

OUTPUT_ENV = "QABOOST_OUTPUT"


def default_output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "results"))


# ---------------------------------------------------------------- configs


def _qboost_from(d, default: QBoostConfig) -> QBoostConfig:
    if d is None:
        return default
    if isinstance(d, QBoostConfig):
        return d
    return QBoostConfig.from_dict({**default.to_dict(), **d})


@dataclass(frozen=True)
class NamesConfig:
    male_file: str | None = None
    female_file: str | None = None
    female_sign: int = 1
    folds: int = 10
    seeds: tuple = (0,)
    qboost: QBoostConfig = field(default_factory=lambda: QBoostConfig(Q=25, oracle=OracleConfig(kind="sa")))
    resamples: int = 30
    split_fractions: tuple = (0.6, 0.2, 0.2)
    trees: int = 500

    @classmethod
    def from_dict(cls, d: dict) -> NamesConfig:
        d = dict(d)
        d["qboost"] = _qboost_from(d.get("qboost"), cls().qboost)
        for key in ("seeds", "split_fractions"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


@dataclass(frozen=True)
class LinsepConfig:
    data_seed: int = 0
    seed: int = 0
    Q: int = 13
    lambda_grid: tuple = (0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0)
    chain_strengths: tuple = (0.5, 1.0, 2.0)
    oracle: OracleConfig = field(default_factory=lambda: OracleConfig(kind="hw"))
    logistic_lambdas: tuple = (1e-4, 1e-3, 1e-2, 1e-1, 1.0)

    @classmethod
    def from_dict(cls, d: dict) -> LinsepConfig:
        d = dict(d)
        if "oracle" in d and not isinstance(d["oracle"], OracleConfig):
            d["oracle"] = OracleConfig.from_dict({**cls().oracle.to_dict(), **d["oracle"]})
        for key in ("lambda_grid", "chain_strengths", "logistic_lambdas"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


@dataclass(frozen=True)
class SeizureConfig:
    clips_per_class: int = 30
    channels: int = 8
    seconds: float = 10.0
    sample_rate: float = 400.0
    eeg: EegParams = field(default_factory=EegParams)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    folds: int = 5
    seed: int = 0
    qboost: QBoostConfig = field(default_factory=lambda: QBoostConfig(Q=25))
    resamples: int = 10
    split_fractions: tuple = (0.6, 0.2, 0.2)
    trees: int = 200
    logistic_lambda: float = 0.01

    @classmethod
    def from_dict(cls, d: dict) -> SeizureConfig:
        d = dict(d)
        d["qboost"] = _qboost_from(d.get("qboost"), cls().qboost)
        if "eeg" in d and not isinstance(d["eeg"], EegParams):
            eeg = dict(d["eeg"])
            if "noise_band_hz" in eeg:
                eeg["noise_band_hz"] = tuple(eeg["noise_band_hz"])
            d["eeg"] = EegParams(**eeg)
        if "features" in d and not isinstance(d["features"], FeatureConfig):
            d["features"] = FeatureConfig.from_dict(d["features"])
        if "split_fractions" in d:
            d["split_fractions"] = tuple(d["split_fractions"])
        return cls(**d)


def with_oracle(cfg, kind: str):
    """Copy of an experiment config with every QBoost oracle switched to ``kind``."""
    if isinstance(cfg, LinsepConfig):
        return replace(cfg, oracle=replace(cfg.oracle, kind=kind))
    return replace(cfg, qboost=replace(cfg.qboost, oracle=replace(cfg.qboost.oracle, kind=kind)))


def _jsonable(obj):
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    if hasattr(obj, "__dataclass_fields__"):
        return _jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def config_to_dict(cfg) -> dict:
    return {k: _jsonable(getattr(cfg, k)) for k in cfg.__dataclass_fields__}


# ---------------------------------------------------------------- output


class RunWriter:
    """Writes artifacts atomically and records their hashes for the manifest."""

    def __init__(self, out_dir, plots: bool = True):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.plots = plots
        self.outputs: dict[str, str] = {}

    def _write_bytes(self, name: str, data: bytes) -> Path:
        path = self.out_dir / name
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, path)
        self.outputs[name] = hashlib.sha256(data).hexdigest()
        return path

    def csv(self, name: str, header, rows) -> Path:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return self._write_bytes(name, buf.getvalue().encode())

    def json(self, name: str, obj) -> Path:
        return self._write_bytes(name, (json.dumps(_jsonable(obj), indent=2) + "\n").encode())

    def figure(self, name: str, fig) -> Path | None:
        buf = io.BytesIO()
        fig.savefig(buf, format="png", dpi=120, metadata={"Software": None})
        import matplotlib.pyplot as plt

        plt.close(fig)
        return self._write_bytes(name, buf.getvalue())

    def manifest(self, experiment: str, cfg, extra=None) -> Path:
        versions = {"qaboost": __version__, "python": platform.python_version()}
        for pkg in ("numpy", "scipy", "numba", "networkx", "matplotlib"):
            try:
                versions[pkg] = metadata.version(pkg)
            except metadata.PackageNotFoundError:
                versions[pkg] = None
        body = {
            "experiment": experiment,
            "config": config_to_dict(cfg),
            "versions": versions,
            "outputs": dict(sorted(self.outputs.items())),
        }
        if extra:
            body.update(_jsonable(extra))
        data = (json.dumps(body, indent=2) + "\n").encode()
        path = self.out_dir / "manifest.json"
        tmp = path.with_name("manifest.json.tmp")
        tmp.write_bytes(data)
        os.replace(tmp, path)
        return path


def _fmt(v) -> str:
    return f"{v:.6f}" if isinstance(v, float) else str(v)


def _summary_rows(scores: dict[str, list[float]]):
    rows = []
    for tech in sorted(scores):
        s = summarize(scores[tech])
        rows.append([tech, len(scores[tech]), *(_fmt(s[k]) for k in SUMMARY_FIELDS)])
    return rows


# ---------------------------------------------------------------- names


@dataclass
class ExperimentResult:
    out_dir: Path
    data: dict = field(default_factory=dict)


def _fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


def names_fold_scores(ds, pool, X_onehot, cfg: NamesConfig, seed: int, fold: int, train_rows, test_rows) -> dict:
    """AUCs of the three techniques on one fold."""
    fseed = _fold_seed(seed, fold)
    y = ds.labels
    f_train, f_val, _ = cfg.split_fractions
    inner = partition(len(train_rows), (f_train / (f_train + f_val), f_val / (f_train + f_val)), fseed)
    train = ds.subset(train_rows[inner.train])
    val = ds.subset(train_rows[inner.validation])
    strong, _ = qboost_train(pool, train, val, cfg.qboost, seed=fseed)
    test_x = ds.features[test_rows]
    out = {"qboost": auc(strong.vote_fraction(test_x), y[test_rows])}
    model = rqboost_train(
        pool,
        ds.subset(train_rows),
        RQBoostConfig(cfg.resamples, cfg.split_fractions, cfg.qboost, fseed),
    )
    out["rqboost"] = auc(rqboost_predict_proba(model, test_x), y[test_rows])
    forest = forest_fit(X_onehot[train_rows], y[train_rows], trees_count=cfg.trees, seed=fseed)
    out["random_forest"] = auc(forest_predict_proba(forest, X_onehot[test_rows]), y[test_rows])
    return out


def run_names(cfg: NamesConfig, out_dir, plots: bool = True) -> ExperimentResult:
    """k-fold AUC of QBoost, RQBoost and a random forest on the names corpus."""
    ds = load_names(cfg.male_file, cfg.female_file, cfg.female_sign)
    pool = names_weak_pool(cfg.female_sign)
    X = names_suffix_matrix(ds)
    rows, scores = [], {}
    for seed in cfg.seeds:
        plan = kfold(len(ds), cfg.folds, seed)
        for fold, train_rows, test_rows in plan.splits():
            for tech, value in names_fold_scores(ds, pool, X, cfg, seed, fold, train_rows, test_rows).items():
                rows.append((tech, seed, fold, value))
                scores.setdefault(tech, []).append(value)
    rows.sort()
    w = RunWriter(out_dir, plots)
    w.csv("names_auc.csv", ["technique", "seed", "fold", "auc"], [[t, s, f, _fmt(a)] for t, s, f, a in rows])
    w.csv("names_summary.csv", ["technique", "n", *SUMMARY_FIELDS], _summary_rows(scores))
    if plots:
        from .plotting import auc_boxplot

        w.figure("names_auc.png", auc_boxplot(scores, "Names corpus: per-fold AUC"))
    w.manifest("names", cfg, {"rows": len(ds), "pool_size": len(pool)})
    return ExperimentResult(Path(out_dir), {"scores": scores})


# ---------------------------------------------------------------- linsep


def _accuracy(pred, labels) -> float:
    return float(np.mean(np.asarray(pred) == np.asarray(labels)))


def run_linsep(cfg: LinsepConfig, out_dir, plots: bool = True) -> ExperimentResult:
    """QBoost over a (lambda, chain strength) grid and penalized logistic fits on the bait matrix."""
    raw = gen_linsep(cfg.data_seed)
    task = linsep_task(raw)
    pool = linsep_pool(task)
    bait = pool[-1].id
    cells = []
    for lam in cfg.lambda_grid:
        for alpha in cfg.chain_strengths:
            qcfg = QBoostConfig(Q=cfg.Q, lambda_grid=(lam,), oracle=replace(cfg.oracle, chain_strengths=(alpha,)))
            strong, _ = qboost_train(pool, task, task, qcfg, seed=cfg.seed)
            pred = predict(strong, task.features)
            cm = confusion(pred, task.labels)
            ids = [m.id for m in strong.members]
            cells.append(
                {
                    "lambda": lam,
                    "chain_strength": alpha,
                    "accuracy": _accuracy(pred, task.labels),
                    "members": ids,
                    "bait_included": bait in ids,
                    "confusion": cm.as_dict(),
                }
            )
    qcfg = QBoostConfig(Q=cfg.Q, lambda_grid=cfg.lambda_grid, oracle=replace(cfg.oracle, chain_strengths=cfg.chain_strengths))
    strong, trace = qboost_train(pool, task, task, qcfg, seed=cfg.seed)
    pred = predict(strong, task.features)
    selected = {
        "accuracy": _accuracy(pred, task.labels),
        "members": [m.id for m in strong.members],
        "member_columns": [task.feature_names[m.column_index] for m in strong.members],
        "bait_included": bait in [m.id for m in strong.members],
        "confusion": confusion(pred, task.labels).as_dict(),
    }
    logistic = []
    for penalty in ("L1", "L2"):
        for lam in cfg.logistic_lambdas:
            model = logistic_fit(task.features, task.labels, penalty, lam)
            lpred = np.where(logistic_predict_proba(model, task.features) > 0.5, 1, -1)
            logistic.append(
                {
                    "penalty": penalty,
                    "lambda": lam,
                    "accuracy": _accuracy(lpred, task.labels),
                    "nonzero_weights": int(np.count_nonzero(np.abs(model.weights) > 1e-10)),
                    "confusion": confusion(lpred, task.labels).as_dict(),
                }
            )
    w = RunWriter(out_dir, plots)
    w.csv(
        "linsep_qboost_cells.csv",
        ["lambda", "chain_strength", "accuracy", "bait_included", "members", "tp", "fn", "fp", "tn"],
        [
            [c["lambda"], c["chain_strength"], _fmt(c["accuracy"]), c["bait_included"], " ".join(c["members"]),
             *c["confusion"].values()]
            for c in cells
        ],
    )
    w.json("linsep_qboost_selected.json", {**selected, "trace": trace.records})
    w.csv(
        "linsep_logistic.csv",
        ["penalty", "lambda", "accuracy", "nonzero_weights", "tp", "fn", "fp", "tn"],
        [[r["penalty"], r["lambda"], _fmt(r["accuracy"]), r["nonzero_weights"], *r["confusion"].values()] for r in logistic],
    )
    if plots:
        from .plotting import linsep_heatmap

        w.figure("linsep_qboost_accuracy.png", linsep_heatmap(cells, cfg.lambda_grid, cfg.chain_strengths))
    matrix_hash = hashlib.sha256(np.ascontiguousarray(raw.features).tobytes()).hexdigest()
    w.manifest("linsep", cfg, {"matrix_sha256": matrix_hash})
    return ExperimentResult(Path(out_dir), {"cells": cells, "selected": selected, "logistic": logistic})


# ---------------------------------------------------------------- seizure


def seizure_clips(cfg: SeizureConfig):
    """Balanced synthetic clips, interictal first, each with its own child seed."""
    seeds = np.random.SeedSequence(cfg.seed).generate_state(2 * cfg.clips_per_class)
    labels = [INTERICTAL] * cfg.clips_per_class + [PREICTAL] * cfg.clips_per_class
    return [
        gen_synthetic_eeg(cfg.channels, cfg.seconds, cfg.sample_rate, label, int(s), cfg.eeg)
        for label, s in zip(labels, seeds)
    ]


def run_seizure(cfg: SeizureConfig, out_dir, plots: bool = True) -> ExperimentResult:
    """Feature pipeline on synthetic clips, then per-fold AUC for boosted and classical models."""
    data = clip_dataset(seizure_clips(cfg), cfg.features)
    plan = kfold(len(data), cfg.folds, cfg.seed)
    rows, scores = [], {}
    for fold, train_rows, test_rows in plan.splits():
        fseed = _fold_seed(cfg.seed, fold)
        binary, stumps = binarize_features(data, "median", train_rows)
        f_train, f_val, _ = cfg.split_fractions
        inner = partition(len(train_rows), (f_train / (f_train + f_val), f_val / (f_train + f_val)), fseed)
        strong, _ = qboost_train(
            stumps, data.subset(train_rows[inner.train]), data.subset(train_rows[inner.validation]), cfg.qboost, fseed
        )
        test = data.subset(test_rows)
        fold_scores = {"qboost": auc(strong.vote_fraction(test.features), test.labels)}
        model = rqboost_train(
            stumps, data.subset(train_rows), RQBoostConfig(cfg.resamples, cfg.split_fractions, cfg.qboost, fseed)
        )
        fold_scores["rqboost"] = auc(rqboost_predict_proba(model, test.features), test.labels)
        forest = forest_fit(data.features[train_rows], data.labels[train_rows], trees_count=cfg.trees, seed=fseed)
        fold_scores["random_forest"] = auc(forest_predict_proba(forest, test.features), test.labels)
        mu = data.features[train_rows].mean(axis=0)
        sd = data.features[train_rows].std(axis=0)
        sd[sd == 0] = 1.0
        lr = logistic_fit((data.features[train_rows] - mu) / sd, data.labels[train_rows], "L2", cfg.logistic_lambda)
        fold_scores["logistic_l2"] = auc(logistic_predict_proba(lr, (test.features - mu) / sd), test.labels)
        for tech, value in fold_scores.items():
            rows.append((tech, fold, value))
            scores.setdefault(tech, []).append(value)
    rows.sort()
    w = RunWriter(out_dir, plots)
    w.csv("seizure_auc.csv", ["technique", "fold", "auc"], [[t, f, _fmt(a)] for t, f, a in rows])
    w.csv("seizure_summary.csv", ["technique", "n", *SUMMARY_FIELDS], _summary_rows(scores))
    if plots:
        from .plotting import auc_boxplot

        w.figure("seizure_auc.png", auc_boxplot(scores, "Synthetic seizure clips: per-fold AUC"))
    w.manifest("seizure", cfg, {"clips": len(data), "features": data.features.shape[1]})
    return ExperimentResult(Path(out_dir), {"scores": scores, "feature_count": data.features.shape[1]})
