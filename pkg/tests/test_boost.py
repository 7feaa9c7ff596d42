import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import boosting_loss
from qaboost.boost import (
    EmptyModelError,
    OracleConfig,
    OracleError,
    ProbabilityModel,
    QBoostConfig,
    RQBoostConfig,
    StrongClassifier,
    build_qboost_qubo,
    fit_from_votes,
    partition,
    predict,
    qboost_train,
    qubo_from_votes,
    residuals,
    resample_seeds,
    rqboost_predict_proba,
    rqboost_train,
)
from qaboost.datasets import LabeledDataset
from qaboost.weak import RawColumn, vote_matrix

BRUTE = QBoostConfig(Q=4, oracle=OracleConfig(kind="brute"))


def column_data(X, y):
    return LabeledDataset(np.asarray(X), np.asarray(y))


def random_pm(rng, shape):
    return rng.choice(np.array([-1, 1], dtype=np.int8), size=shape)


class TestResiduals:
    def test_empty_strong(self):
        d = column_data([[1], [-1], [1]], [1, -1, -1])
        np.testing.assert_array_equal(residuals(d, StrongClassifier(), 5), [1, -1, -1])

    def test_one_agreeing_member(self):
        d = column_data([[1], [-1], [1]], [1, -1, 1])
        r = residuals(d, StrongClassifier((RawColumn(0),)), 1)
        np.testing.assert_allclose(r, d.labels / 2)


class TestQubo:
    def test_empty_training_set(self):
        F = np.zeros((0, 3))
        q, offset = qubo_from_votes(F, np.zeros(0), 0.1, 0.25)
        assert dict(q.linear) == {0: 0.25, 1: 0.25, 2: 0.25} and not q.quadratic and offset == 0.0

    def test_single_classifier_matches_labels(self):
        rng = np.random.default_rng(0)
        S, kappa = 40, 0.2
        F = random_pm(rng, (S, 1)).astype(float)
        yhat = kappa * F[:, 0]
        for lam in (0.0, 0.5 * kappa**2 * S - 0.1, 0.5 * kappa**2 * S + 0.1):
            q, _ = qubo_from_votes(F, yhat, kappa, lam)
            assert q.linear[0] == pytest.approx(lam - 0.5 * kappa**2 * S)
            best = min((0, 1), key=lambda w: q.energy([w]))
            assert best == (1 if lam < 0.5 * kappa**2 * S else 0)

    @settings(max_examples=40, deadline=None)
    @given(
        st.integers(1, 6),
        st.integers(0, 12),
        st.sampled_from([0.0, 0.01, 0.1]),
        st.integers(0, 2**31),
    )
    def test_energy_plus_offset_is_loss(self, nb, S, lam, seed):
        rng = np.random.default_rng(seed)
        F = random_pm(rng, (S, nb))
        yhat = rng.uniform(-1, 1, S)
        kappa = 1.0 / (nb + rng.integers(0, 5))
        q, offset = qubo_from_votes(F, yhat, kappa, lam)
        for w in itertools.product((0, 1), repeat=nb):
            assert q.energy(w) + offset == pytest.approx(boosting_loss(F.tolist(), yhat, kappa, lam, w), abs=1e-9)

    def test_build_from_pool(self):
        rng = np.random.default_rng(1)
        X = random_pm(rng, (10, 3))
        d = column_data(X, X[:, 0])
        batch = [RawColumn(0), RawColumn(2, -1)]
        q1, o1 = build_qboost_qubo(batch, d, d.labels.astype(float), 0.25, 0.1)
        q2, o2 = qubo_from_votes(vote_matrix(batch, X), d.labels.astype(float), 0.25, 0.1)
        assert q1 == q2 and o1 == o2
        with pytest.raises(ValueError):
            build_qboost_qubo([], d, d.labels, 0.25, 0.1)


class TestPredict:
    X = np.array([[1, 1, -1], [1, -1, -1]])

    def test_unanimous(self):
        s = StrongClassifier((RawColumn(0), RawColumn(0)))
        assert predict(s, self.X).tolist() == [1, 1]

    def test_majority(self):
        s = StrongClassifier((RawColumn(0), RawColumn(0), RawColumn(2)))
        assert predict(s, self.X[:1]).tolist() == [1]

    def test_tie_fixed_positive(self):
        s = StrongClassifier((RawColumn(0), RawColumn(2)))
        assert predict(s, self.X).tolist() == [1, 1]

    def test_tie_seeded_coin_reproducible(self):
        rng = np.random.default_rng(0)
        X = np.column_stack([np.ones(200), -np.ones(200), rng.normal(size=200)])
        s = StrongClassifier((RawColumn(0), RawColumn(1)), "seeded_coin", 7)
        a = predict(s, X)
        assert set(a.tolist()) == {-1, 1}
        np.testing.assert_array_equal(a, predict(s, X))
        # coins depend on row content, not position
        np.testing.assert_array_equal(predict(s, X[::-1]), a[::-1])

    def test_empty_raises(self):
        with pytest.raises(EmptyModelError):
            predict(StrongClassifier(), self.X)

    def test_dict_round_trip(self):
        s = StrongClassifier((RawColumn(0), RawColumn(2, -1)), "seeded_coin", 3)
        assert StrongClassifier.from_dict(json.loads(json.dumps(s.to_dict()))) == s

    def test_bad_tie_policy(self):
        with pytest.raises(ValueError):
            StrongClassifier((), "random")


class TestQBoostTrain:
    def test_perfect_member_accepted(self):
        rng = np.random.default_rng(2)
        X = random_pm(rng, (120, 8))
        y = X[:, 5].copy()
        pool = [RawColumn(j) for j in range(8)]
        d = column_data(X, y)
        strong, trace = qboost_train(pool, d.subset(range(80)), d.subset(range(80, 120)), BRUTE, seed=0)
        assert RawColumn(5) in strong.members
        assert np.all(predict(strong, X[80:]) == y[80:])
        assert trace.acceptances[-1]["validation_error"] == 0.0
        assert len(trace.acceptances) == 1

    def test_uncorrelated_pool_falls_back(self):
        rng = np.random.default_rng(3)
        X = random_pm(rng, (400, 6))
        y = random_pm(rng, 400)
        pool = [RawColumn(j) for j in range(6)]
        cfg = QBoostConfig(Q=6, lambda_grid=(100.0,), oracle=OracleConfig(kind="brute"))
        d = column_data(X, y)
        strong, trace = qboost_train(pool, d.subset(range(200)), d.subset(range(200, 400)), cfg, seed=0)
        assert len(strong) == 1
        assert trace.records[-1]["event"] == "fallback"
        assert abs(trace.records[-1]["validation_error"] - 0.5) < 0.1

    def test_trace_records_oracle_calls(self):
        rng = np.random.default_rng(4)
        X = random_pm(rng, (60, 9))
        d = column_data(X, np.sign(X[:, :3].sum(axis=1)))
        pool = [RawColumn(j) for j in range(9)]
        _, trace = qboost_train(pool, d, d, BRUTE, seed=1)
        calls = trace.oracle_calls
        assert calls and {"pass", "batch", "lambda", "selected", "loss"} <= set(calls[0])
        assert json.loads(trace.to_json())

    def test_deterministic(self):
        rng = np.random.default_rng(5)
        X = random_pm(rng, (80, 10))
        d = column_data(X, np.sign(X[:, :5].sum(axis=1)))
        pool = [RawColumn(j) for j in range(10)]
        cfg = QBoostConfig(Q=5, oracle=OracleConfig(kind="sa"))
        a = qboost_train(pool, d, d, cfg, seed=3)
        b = qboost_train(pool, d, d, cfg, seed=3)
        assert a[0] == b[0] and a[1].to_json() == b[1].to_json()

    def test_oracle_failure_has_context(self):
        class Broken:
            def __call__(self, q, seed):
                raise RuntimeError("boom")

        F = np.ones((4, 2), dtype=np.int8)
        with pytest.raises(OracleError, match="pass 0, batch 0"):
            fit_from_votes([RawColumn(0), RawColumn(1)], F, np.ones(4), F, np.ones(4), BRUTE, oracle=Broken())

    def test_empty_pool(self):
        with pytest.raises(ValueError):
            fit_from_votes([], np.zeros((2, 0)), np.ones(2), np.zeros((2, 0)), np.ones(2), BRUTE)

    def test_hw_oracle_runs(self):
        rng = np.random.default_rng(6)
        X = random_pm(rng, (50, 6))
        d = column_data(X, X[:, 0])
        cfg = QBoostConfig(Q=6, oracle=OracleConfig(kind="hw", solver=BRUTE.oracle.solver))
        strong, trace = qboost_train([RawColumn(j) for j in range(6)], d, d, cfg, seed=0)
        assert RawColumn(0) in strong.members
        assert "chain_strength" in trace.oracle_calls[0]["oracle"]

    @pytest.mark.parametrize(
        "kwargs", [{"Q": 0}, {"lambda_grid": ()}, {"lambda_grid": (-1.0,)}, {"max_outer_iterations": 0}]
    )
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            QBoostConfig(**kwargs)

    def test_config_round_trip(self):
        cfg = QBoostConfig(Q=7, oracle=OracleConfig(kind="hw", chain_strengths=(1, 3)))
        assert QBoostConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


class TestRQBoost:
    def setup_method(self):
        rng = np.random.default_rng(7)
        self.X = random_pm(rng, (150, 8))
        self.data = column_data(self.X, np.sign(self.X[:, :3].sum(axis=1)))
        self.pool = [RawColumn(j) for j in range(8)]

    def test_single_resample_matches_qboost(self):
        cfg = RQBoostConfig(resamples=1, inner=BRUTE, seed=11)
        model = rqboost_train(self.pool, self.data, cfg)
        split_seed, train_seed = resample_seeds(11, 1)[0]
        part = partition(len(self.data), cfg.split_fractions, split_seed)
        strong, _ = qboost_train(
            self.pool, self.data.subset(part.train), self.data.subset(part.validation), BRUTE, train_seed
        )
        assert model.members == (strong,)

    def test_partition_disjoint_cover(self):
        part = partition(101, (0.6, 0.2, 0.2), 0)
        rows = np.concatenate([part.train, part.validation, part.holdout])
        assert sorted(rows.tolist()) == list(range(101))
        assert len(part.train) == 61 and len(part.validation) == 20

    def test_probability_in_unit_interval(self):
        model = rqboost_train(self.pool, self.data, RQBoostConfig(resamples=4, inner=BRUTE))
        p = rqboost_predict_proba(model, self.X)
        assert p.shape == (150,) and np.all((p >= 0) & (p <= 1))
        assert len(model.members) == 4

    def test_all_plus_votes(self):
        model = ProbabilityModel((StrongClassifier((RawColumn(0), RawColumn(0))),))
        assert rqboost_predict_proba(model, np.ones((3, 1))).tolist() == [1.0, 1.0, 1.0]

    def test_two_classifier_average(self):
        X = np.array([[1, -1, 1]])
        half = StrongClassifier((RawColumn(0), RawColumn(1)))
        full = StrongClassifier((RawColumn(0), RawColumn(2)))
        assert rqboost_predict_proba(ProbabilityModel((half, full)), X)[0] == 0.75

    def test_empty_member_raises(self):
        with pytest.raises(EmptyModelError):
            rqboost_predict_proba(ProbabilityModel((StrongClassifier(),)), np.ones((1, 1)))
        with pytest.raises(EmptyModelError):
            rqboost_predict_proba(ProbabilityModel(()), np.ones((1, 1)))

    @pytest.mark.parametrize("kwargs", [{"resamples": 0}, {"split_fractions": (0.5, 0.5)}, {"split_fractions": (0.5, 0.5, 0.5)}])
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            RQBoostConfig(**kwargs)
