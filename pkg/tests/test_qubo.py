import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import exhaustive_min, ising_energy_loop, qubo_energy_loop, random_qubo_terms
from qaboost.qubo import (
    DimensionError,
    IsingProblem,
    QuboProblem,
    bits_to_spins,
    energy,
    flip_delta,
    ising_to_qubo,
    qubo_to_ising,
)
from qaboost.solvers import brute_force_solve


@st.composite
def qubos(draw, max_vars=8):
    n = draw(st.integers(1, max_vars))
    coef = st.floats(-5, 5, allow_nan=False, allow_infinity=False)
    linear = {i: draw(coef) for i in range(n) if draw(st.booleans())}
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    quadratic = {p: draw(coef) for p in pairs if draw(st.booleans())}
    return QuboProblem(n, linear, quadratic, draw(coef))


class TestConstruction:
    def test_keys_canonicalized(self):
        q = QuboProblem(3, {}, {(2, 0): 1.5})
        assert dict(q.quadratic) == {(0, 2): 1.5}

    @pytest.mark.parametrize(
        "quadratic",
        [{(1, 1): 1.0}, {(0, 1): 1.0, (1, 0): 2.0}, {(0, 5): 1.0}],
    )
    def test_rejects_bad_pairs(self, quadratic):
        with pytest.raises(ValueError):
            QuboProblem(3, {}, quadratic)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            QuboProblem(2, {0: float("nan")})
        with pytest.raises(ValueError):
            QuboProblem(2, {}, {(0, 1): float("inf")})

    def test_immutable(self):
        q = QuboProblem(2, {0: 1.0})
        with pytest.raises(TypeError):
            q.linear[0] = 2.0

    def test_equality_and_hash(self):
        a = QuboProblem(2, {0: 1.0}, {(1, 0): 2.0})
        b = QuboProblem(2, {0: 1.0}, {(0, 1): 2.0})
        assert a == b and hash(a) == hash(b)
        assert a != QuboProblem(2, {0: 1.0}, {(0, 1): 2.5})

    def test_json_round_trip(self):
        rng = np.random.default_rng(1)
        lin, quad = random_qubo_terms(rng, 6)
        q = QuboProblem(6, lin, quad, 0.1)
        back = QuboProblem.from_json(q.to_json())
        assert back == q
        data = json.loads(q.to_json())
        assert set(data) == {"num_vars", "linear", "quadratic", "offset"}
        assert all("," in k for k in data["quadratic"])

    def test_variable_graph_skips_zero_couplings(self):
        q = QuboProblem(3, {}, {(0, 1): 1.0, (1, 2): 0.0})
        g = q.variable_graph()
        assert set(g.nodes) == {0, 1, 2}
        assert {tuple(sorted(e)) for e in g.edges} == {(0, 1)}


class TestEnergy:
    def test_all_zero_assignment(self):
        q = QuboProblem(3, {0: 2.0, 2: -1.0}, {(0, 1): 4.0})
        assert energy(q, [0, 0, 0]) == 0.0

    def test_hand_example(self):
        q = QuboProblem(2, {0: 1.0, 1: -1.0}, {(0, 1): 2.0})
        assert energy(q, (0, 1)) == -1.0

    def test_dimension_error(self):
        q = QuboProblem(2, {0: 1.0})
        with pytest.raises(DimensionError):
            energy(q, [1, 0, 1])

    def test_random_10_var_minimum_matches_brute_force(self):
        rng = np.random.default_rng(7)
        lin, quad = random_qubo_terms(rng, 10)
        q = QuboProblem(10, lin, quad)
        best, _ = exhaustive_min(10, lin, quad)
        assert brute_force_solve(q).lowest_energy == pytest.approx(best, abs=1e-9)

    @settings(max_examples=50, deadline=None)
    @given(qubos())
    def test_matches_loop_oracle(self, q):
        for bits in itertools.islice(itertools.product((0, 1), repeat=q.num_vars), 64):
            expected = qubo_energy_loop(q.num_vars, dict(q.linear), dict(q.quadratic), q.offset, bits)
            assert q.energy(bits) == pytest.approx(expected, abs=1e-9)

    @settings(max_examples=50, deadline=None)
    @given(qubos(), st.data())
    def test_one_bit_delta(self, q, data):
        bits = np.array(data.draw(st.lists(st.integers(0, 1), min_size=q.num_vars, max_size=q.num_vars)))
        k = data.draw(st.integers(0, q.num_vars - 1))
        flipped = bits.copy()
        flipped[k] ^= 1
        assert q.energy(flipped) - q.energy(bits) == pytest.approx(flip_delta(q, bits, k), abs=1e-9)

    @settings(max_examples=30, deadline=None)
    @given(qubos(max_vars=5), st.data())
    def test_linear_in_coefficients(self, q, data):
        n = q.num_vars
        other = QuboProblem(n, {i: 1.0 + i for i in range(n)}, {(i, j): 0.5 for i in range(n) for j in range(i + 1, n)}, 2.0)
        summed = QuboProblem(
            n,
            {i: q.linear.get(i, 0.0) + other.linear.get(i, 0.0) for i in range(n)},
            {p: q.quadratic.get(p, 0.0) + other.quadratic.get(p, 0.0) for p in set(q.quadratic) | set(other.quadratic)},
            q.offset + other.offset,
        )
        bits = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
        assert summed.energy(bits) == pytest.approx(q.energy(bits) + other.energy(bits), abs=1e-9)

    def test_batch_energies(self):
        q = QuboProblem(2, {0: 1.0, 1: -1.0}, {(0, 1): 2.0})
        states = np.array(list(itertools.product((0, 1), repeat=2)))
        np.testing.assert_allclose(q.energies(states), [0.0, -1.0, 1.0, 2.0])


class TestConversions:
    def test_single_variable(self):
        p = qubo_to_ising(QuboProblem(1, {0: 1.0}))
        assert p.linear[0] == 0.5 and p.offset == 0.5

    @settings(max_examples=50, deadline=None)
    @given(qubos())
    def test_round_trip(self, q):
        back = ising_to_qubo(qubo_to_ising(q))
        for i in range(q.num_vars):
            assert back.linear.get(i, 0.0) == pytest.approx(q.linear.get(i, 0.0), abs=1e-12)
        for p in set(q.quadratic) | set(back.quadratic):
            assert back.quadratic.get(p, 0.0) == pytest.approx(q.quadratic.get(p, 0.0), abs=1e-12)
        assert back.offset == pytest.approx(q.offset, abs=1e-12)

    def test_random_8_var_all_assignments(self):
        rng = np.random.default_rng(3)
        lin, quad = random_qubo_terms(rng, 8)
        q = QuboProblem(8, lin, quad, 0.7)
        p = qubo_to_ising(q)
        for bits in itertools.product((0, 1), repeat=8):
            spins = bits_to_spins(bits)
            ising = ising_energy_loop(8, dict(p.linear), dict(p.quadratic), p.offset, spins)
            assert ising == pytest.approx(q.energy(bits), abs=1e-9)

    def test_ising_problem_energy(self):
        p = IsingProblem(2, {0: 1.0}, {(0, 1): -1.0}, 0.5)
        assert p.energy([1, 1]) == pytest.approx(0.5)
        assert p.energy([-1, 1]) == pytest.approx(0.5)
