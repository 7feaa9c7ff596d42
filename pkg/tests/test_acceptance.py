"""Acceptance criteria 1-9, each checked at its stated tolerance.

Every criterion is a function returning ``(passed, detail)``. Under pytest the
results are collected and printed as one PASS/FAIL line per criterion in the
terminal summary; running this file directly prints the same lines.

    python tests/test_acceptance.py          # all criteria
    pytest tests/test_acceptance.py -v       # same, as tests
"""

from __future__ import annotations

import itertools
import sys
import tempfile
import time
from pathlib import Path

import networkx as nx
import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import pairwise_auc  # noqa: E402
from qaboost.boost import (  # noqa: E402
    OracleConfig,
    ProbabilityModel,
    QBoostConfig,
    StrongClassifier,
    qubo_from_votes,
    rqboost_predict_proba,
)
from qaboost.chimera import build_chimera, clique_embed, heuristic_embed, random_defects, verify_embedding  # noqa: E402
from qaboost.datasets import (  # noqa: E402
    binarize_features,
    clip_dataset,
    extract_features,
    feature_names,
    gen_synthetic_eeg,
)
from qaboost.evaluation import auc, auc_pairwise, kfold  # noqa: E402
from qaboost.experiments import LinsepConfig, NamesConfig, SeizureConfig, run_linsep, run_names, run_seizure, seizure_clips  # noqa: E402
from qaboost.qubo import IsingProblem, QuboProblem  # noqa: E402
from qaboost.solvers import IceModel, SolverConfig, apply_ice, brute_force_solve, simulated_anneal  # noqa: E402
from qaboost.weak import RawColumn  # noqa: E402

# tolerance bands
QUBO_TOL = 1e-9
BOOST_INSTANCES = 200
HEURISTIC_MIN_CLIQUE = 22
HEURISTIC_MIN_SUCCESSES = 7
NAMES_SEEDS = (0, 1, 2)
NAMES_RF_BAND = (0.81, 0.86)
NAMES_QBOOST_BAND = (0.74, 0.81)
NAMES_BUDGET_SECONDS = 30 * 60
LINSEP_BAND = (0.85, 0.97)
LINSEP_BAIT = "column:11:+1"
LINSEP_BUDGET_SECONDS = 10 * 60
ICE_DRAWS = 100_000
ICE_STD_BAND = (0.196, 0.204)
ICE_MEAN_MAX = 0.002
SA_INSTANCES = 100
SA_MIN_HITS = 95
AUC_TOL = 1e-12

RESULTS: dict[int, tuple[bool, str]] = {}


def _record(number: int, passed: bool, detail: str) -> tuple[bool, str]:
    RESULTS[number] = (passed, detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}", flush=True)
    return passed, detail


# ---------------------------------------------------------------- 1


def _loss_table(F, yhat, kappa, lam):
    """Loss at every binary w, computed directly from the boosting objective."""
    nb = F.shape[1]
    W = np.array(list(itertools.product((0, 1), repeat=nb)), dtype=float)
    votes = kappa * W @ F.T
    return W, 0.5 * ((votes - yhat) ** 2).sum(axis=1) + lam * W.sum(axis=1)


def criterion_1():
    rng = np.random.default_rng(2024)
    worst, checked = 0.0, 0
    for _ in range(BOOST_INSTANCES):
        nb = int(rng.integers(1, 13))
        S = int(rng.integers(1, 51))
        lam = float(rng.choice([0.0, 0.01, 0.1]))
        F = rng.choice([-1.0, 1.0], size=(S, nb))
        strong_size = int(rng.integers(0, 20))
        kappa = 1.0 / (strong_size + nb)
        yhat = rng.choice([-1.0, 1.0], size=S) - kappa * rng.integers(-strong_size, strong_size + 1, size=S)
        q, offset = qubo_from_votes(F, yhat, kappa, lam)
        W, loss = _loss_table(F, yhat, kappa, lam)
        energy = q.energies(W.astype(np.int8)) + offset
        worst = max(worst, float(np.max(np.abs(energy - loss))))
        checked += len(W)
    return _record(1, worst <= QUBO_TOL, f"{BOOST_INSTANCES} instances, {checked} assignments, max |E+c-L| = {worst:.2e}")


# ---------------------------------------------------------------- 2


def criterion_2():
    notes, ok = [], True
    for m, n in ((12, 49), (8, 33)):
        g = build_chimera(m)
        emb = clique_embed(g)
        good = len(emb) == n and verify_embedding(nx.complete_graph(n), g, emb).ok
        ok &= good
        notes.append(f"K{n} on C{m} {'ok' if good else 'FAILED'} ({emb.num_qubits} qubits)")
    per_cell = [clique_embed(build_chimera(m)).num_qubits / m**2 for m in range(2, 13)]
    quadratic = max(per_cell) / min(per_cell) < 2.0
    ok &= quadratic
    notes.append(f"qubits/m^2 in [{min(per_cell):.1f}, {max(per_cell):.1f}] for m=2..12")
    successes = 0
    for seed in range(10):
        g = random_defects(8, 36, seed)
        clique = nx.complete_graph(HEURISTIC_MIN_CLIQUE)
        emb = heuristic_embed(clique, g, seed=seed)
        successes += emb is not None and verify_embedding(clique, g, emb).ok
    ok &= successes >= HEURISTIC_MIN_SUCCESSES
    notes.append(f"heuristic K{HEURISTIC_MIN_CLIQUE} on {successes}/10 random 36-defect C8")
    return _record(2, ok, "; ".join(notes))


# ---------------------------------------------------------------- 3


def criterion_3():
    cfg = NamesConfig(seeds=NAMES_SEEDS, qboost=QBoostConfig(Q=25, oracle=OracleConfig(kind="sa")))
    start = time.perf_counter()
    with tempfile.TemporaryDirectory() as tmp:
        scores = run_names(cfg, tmp, plots=False).data["scores"]
    elapsed = time.perf_counter() - start
    means = {k: float(np.mean(v)) for k, v in scores.items()}
    rf, qb, rq = means["random_forest"], means["qboost"], means["rqboost"]
    ok = (
        NAMES_RF_BAND[0] <= rf <= NAMES_RF_BAND[1]
        and NAMES_QBOOST_BAND[0] <= qb <= NAMES_QBOOST_BAND[1]
        and rq >= qb
        and elapsed <= NAMES_BUDGET_SECONDS
    )
    detail = (
        f"seeds {list(NAMES_SEEDS)} x 10 folds: RF {rf:.4f}, QBoost {qb:.4f}, RQBoost {rq:.4f}, "
        f"{elapsed / 60:.1f} min"
    )
    return _record(3, ok, detail)


# ---------------------------------------------------------------- 4


def criterion_4():
    start = time.perf_counter()
    with tempfile.TemporaryDirectory() as tmp:
        data = run_linsep(LinsepConfig(), tmp, plots=False).data
    elapsed = time.perf_counter() - start
    sel = data["selected"]
    acc = sel["accuracy"]
    l1 = max(r["accuracy"] for r in data["logistic"] if r["penalty"] == "L1")
    l2 = max(r["accuracy"] for r in data["logistic"] if r["penalty"] == "L2")
    ok = (
        LINSEP_BAIT in sel["members"]
        and acc < 1.0
        and LINSEP_BAND[0] <= acc <= LINSEP_BAND[1] + 1e-12
        and l1 == 1.0
        and l2 == 1.0
        and elapsed <= LINSEP_BUDGET_SECONDS
    )
    detail = (
        f"QBoost accuracy {acc:.3f} with bait c13 {'included' if LINSEP_BAIT in sel['members'] else 'MISSING'}; "
        f"best L1 {l1:.3f}, best L2 {l2:.3f}; {elapsed:.0f} s"
    )
    return _record(4, ok, detail)


# ---------------------------------------------------------------- 5


def criterion_5():
    p = IsingProblem(ICE_DRAWS, {})
    noisy = apply_ice(p, IceModel(noise_std_fraction=0.05, h_full_range=4.0), seed=12345)
    draws = np.array([noisy.linear[i] for i in range(ICE_DRAWS)])
    std, mean = float(draws.std()), float(draws.mean())
    ok = ICE_STD_BAND[0] <= std <= ICE_STD_BAND[1] and abs(mean) < ICE_MEAN_MAX
    return _record(5, ok, f"{ICE_DRAWS} draws: std {std:.5f}, mean {mean:+.5f}")


# ---------------------------------------------------------------- 6


def criterion_6():
    rng = np.random.default_rng(6)
    hits = 0
    cfg = SolverConfig()
    for k in range(SA_INSTANCES):
        n = 16
        linear = {i: float(rng.uniform(-1, 1)) for i in range(n)}
        quadratic = {(i, j): float(rng.uniform(-1, 1)) for i in range(n) for j in range(i + 1, n)}
        q = QuboProblem(n, linear, quadratic)
        best = brute_force_solve(q).lowest_energy
        found = simulated_anneal(q, cfg.with_seed(k)).lowest_energy
        hits += abs(found - best) <= QUBO_TOL
    return _record(6, hits >= SA_MIN_HITS, f"default SA hit the optimum on {hits}/{SA_INSTANCES}")


# ---------------------------------------------------------------- 7


def criterion_7():
    rng = np.random.default_rng(7)
    worst = 0.0
    sizes = np.linspace(2, 2000, 100).astype(int)
    for k, n in enumerate(sizes):
        labels = rng.choice([-1, 1], size=n)
        labels[0], labels[-1] = 1, -1
        scores = rng.normal(size=n)
        if k % 2:
            scores = np.round(scores, 1)  # force ties
        ref = pairwise_auc(scores.tolist(), labels.tolist()) if n <= 300 else None
        fast = auc(scores, labels)
        worst = max(worst, abs(fast - auc_pairwise(scores, labels)))
        if ref is not None:
            worst = max(worst, abs(fast - ref))
    return _record(7, worst <= AUC_TOL, f"100 sets, n up to {sizes[-1]}, max diff {worst:.1e}")


# ---------------------------------------------------------------- 8


def criterion_8():
    rng = np.random.default_rng(8)
    p = 9
    members = []
    for size in (1, 2, 3, 4, 5):
        cols = rng.choice(p, size=size, replace=False)
        members.append(StrongClassifier(tuple(RawColumn(int(c), int(rng.choice([-1, 1]))) for c in cols)))
    model = ProbabilityModel(tuple(members))
    X = rng.choice([-1, 1], size=(1000, p))
    proba = rqboost_predict_proba(model, X)
    exact, complement = True, 0.0
    for r in range(len(X)):
        plus, minus = [], []
        for strong in members:
            votes = [m.polarity * (1 if X[r, m.column_index] > 0 else -1) for m in strong.members]
            plus.append(sum(v == 1 for v in votes) / len(votes))
            minus.append(sum(v == -1 for v in votes) / len(votes))
        hand = sum(plus) / len(plus)
        exact &= bool(proba[r] == hand)
        complement = max(complement, abs(hand + sum(minus) / len(minus) - 1.0))
    ok = exact and complement <= 1e-15
    return _record(8, ok, f"1000 rows: exact match {exact}, max |p(+1)+p(-1)-1| = {complement:.1e}")


# ---------------------------------------------------------------- 9


def criterion_9():
    notes, ok = [], True
    for n in (2, 8, 16):
        clip = gen_synthetic_eeg(channels=n, seconds=10, seed=n)
        count = sum(name.startswith("corr:") for name in feature_names(clip))
        good = count == n * (n - 1) // 2 and len(extract_features(clip)) == len(feature_names(clip))
        ok &= good
    notes.append("correlation block length n(n-1)/2 for n in {2, 8, 16}")

    cfg = SeizureConfig()
    with tempfile.TemporaryDirectory() as a, tempfile.TemporaryDirectory() as b:
        run_seizure(cfg, a, plots=False)
        run_seizure(cfg, b, plots=False)
        same = all(
            (Path(a) / name).read_bytes() == (Path(b) / name).read_bytes()
            for name in ("seizure_auc.csv", "seizure_summary.csv")
        )
    ok &= same
    notes.append(f"two full runs {'identical' if same else 'DIFFER'}")

    data = clip_dataset(seizure_clips(cfg), cfg.features)
    plan = kfold(len(data), cfg.folds, cfg.seed)
    negative, zero, total = 0, 0, 0
    for _, train_rows, _ in plan.splits():
        _, stumps = binarize_features(data, "median", train_rows)
        y = data.labels[train_rows].astype(float)
        for s in stumps:
            if s.degenerate:
                continue
            dot = float(s.predict(data.features[train_rows]) @ y)
            total += 1
            negative += dot < 0
            zero += dot == 0
    ok &= negative == 0
    notes.append(f"{total} fold stumps: {negative} negatively correlated, {zero} uncorrelated")
    return _record(9, ok, "; ".join(notes))


CRITERIA = {n: globals()[f"criterion_{n}"] for n in range(1, 10)}


# ---------------------------------------------------------------- pytest wrappers


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    passed, detail = CRITERIA[number]()
    assert passed, detail


if __name__ == "__main__":
    wanted = [int(a) for a in sys.argv[1:]] or sorted(CRITERIA)
    for number in wanted:
        CRITERIA[number]()
    sys.exit(0 if all(RESULTS[n][0] for n in wanted) else 1)
