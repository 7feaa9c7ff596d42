"""QUBO and Ising problem representations.

Both forms share one sparse layout: a linear map ``{i: h_i}``, a quadratic map
``{(i, j): J_ij}`` keyed by canonical pairs ``i < j``, and a constant offset.
QUBO variables take values in {0, 1}; Ising variables take values in {-1, +1}.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np


class DimensionError(ValueError):
    """Assignment length does not match the problem size."""


def _canonical_terms(num_vars, linear, quadratic):
    lin = {}
    for i, v in linear.items():
        i = int(i)
        if not 0 <= i < num_vars:
            raise ValueError(f"linear index {i} out of range for {num_vars} variables")
        v = float(v)
        if not math.isfinite(v):
            raise ValueError(f"non-finite linear coefficient at {i}")
        lin[i] = v
    quad = {}
    for (i, j), v in quadratic.items():
        i, j = int(i), int(j)
        if i == j:
            raise ValueError(f"diagonal pair ({i}, {i}) is not allowed; use the linear term")
        if not (0 <= i < num_vars and 0 <= j < num_vars):
            raise ValueError(f"pair ({i}, {j}) out of range for {num_vars} variables")
        key = (i, j) if i < j else (j, i)
        if key in quad:
            raise ValueError(f"duplicate coupling for pair {key}")
        v = float(v)
        if not math.isfinite(v):
            raise ValueError(f"non-finite coupling at {key}")
        quad[key] = v
    return dict(sorted(lin.items())), dict(sorted(quad.items()))


@dataclass(frozen=True)
class _Quadratic:
    num_vars: int
    linear: Mapping[int, float] = field(default_factory=dict)
    quadratic: Mapping[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self):
        n = int(self.num_vars)
        if n < 0:
            raise ValueError("num_vars must be non-negative")
        if not math.isfinite(self.offset):
            raise ValueError("offset must be finite")
        lin, quad = _canonical_terms(n, self.linear, self.quadratic)
        object.__setattr__(self, "num_vars", n)
        object.__setattr__(self, "linear", MappingProxyType(lin))
        object.__setattr__(self, "quadratic", MappingProxyType(quad))
        object.__setattr__(self, "offset", float(self.offset))

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return (
            self.num_vars == other.num_vars
            and dict(self.linear) == dict(other.linear)
            and dict(self.quadratic) == dict(other.quadratic)
            and self.offset == other.offset
        )

    def __hash__(self):
        return hash((self.num_vars, tuple(self.linear.items()), tuple(self.quadratic.items()), self.offset))

    def dense(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(h, J)`` with ``J`` strictly upper triangular."""
        h = np.zeros(self.num_vars)
        J = np.zeros((self.num_vars, self.num_vars))
        for i, v in self.linear.items():
            h[i] = v
        for (i, j), v in self.quadratic.items():
            J[i, j] = v
        return h, J

    def max_abs_coefficient(self) -> float:
        values = [abs(v) for v in self.linear.values()] + [abs(v) for v in self.quadratic.values()]
        return max(values, default=0.0)

    def variable_graph(self):
        """Interaction graph: one node per variable, one edge per nonzero coupling."""
        import networkx as nx

        g = nx.Graph()
        g.add_nodes_from(range(self.num_vars))
        g.add_edges_from(k for k, v in self.quadratic.items() if v != 0.0)
        return g

    def _energies(self, states: np.ndarray) -> np.ndarray:
        states = np.asarray(states, dtype=float)
        single = states.ndim == 1
        states = np.atleast_2d(states)
        if states.shape[1] != self.num_vars:
            raise DimensionError(f"assignment length {states.shape[1]} != num_vars {self.num_vars}")
        h, J = self.dense()
        e = states @ h + np.einsum("ri,ij,rj->r", states, J, states) + self.offset
        return e[0] if single else e

    def to_dict(self) -> dict:
        return {
            "num_vars": self.num_vars,
            "linear": {str(i): v for i, v in self.linear.items()},
            "quadratic": {f"{i},{j}": v for (i, j), v in self.quadratic.items()},
            "offset": self.offset,
        }

    @classmethod
    def from_dict(cls, data: Mapping):
        quadratic = {}
        for key, v in data.get("quadratic", {}).items():
            i, j = (int(t) for t in str(key).split(","))
            if (i, j) in quadratic or (j, i) in quadratic:
                raise ValueError(f"duplicate coupling for pair {key!r}")
            quadratic[(i, j)] = v
        return cls(
            num_vars=int(data["num_vars"]),
            linear={int(k): v for k, v in data.get("linear", {}).items()},
            quadratic=quadratic,
            offset=float(data.get("offset", 0.0)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str):
        return cls.from_dict(json.loads(text))

    def replace(self, *, linear=None, quadratic=None, offset=None):
        return type(self)(
            self.num_vars,
            self.linear if linear is None else linear,
            self.quadratic if quadratic is None else quadratic,
            self.offset if offset is None else offset,
        )


class QuboProblem(_Quadratic):
    """Minimize ``sum_{i<j} J_ij x_i x_j + sum_i h_i x_i + offset`` over ``x in {0,1}^n``.

    Parameters
    ----------
    num_vars : int
        Number of binary variables.
    linear : mapping of int to float
        Biases ``h_i``.
    quadratic : mapping of (int, int) to float
        Couplings ``J_ij``. Keys are canonicalised to ``i < j``; supplying both
        ``(i, j)`` and ``(j, i)`` or a diagonal pair raises ``ValueError``.
    offset : float
        Constant term.
    """

    def energy(self, assignment) -> float:
        return float(self._energies(assignment))

    def energies(self, assignments) -> np.ndarray:
        return np.atleast_1d(self._energies(np.atleast_2d(assignments)))


class IsingProblem(_Quadratic):
    """Minimize ``sum_{i<j} J_ij s_i s_j + sum_i h_i s_i + offset`` over ``s in {-1,+1}^n``."""

    def energy(self, spins) -> float:
        return float(self._energies(spins))

    def energies(self, spins) -> np.ndarray:
        return np.atleast_1d(self._energies(np.atleast_2d(spins)))


def energy(q: QuboProblem, a) -> float:
    """Energy of binary assignment ``a`` under ``q``; raises ``DimensionError`` on length mismatch."""
    return q.energy(a)


def flip_delta(q: QuboProblem, a, k: int) -> float:
    """Energy change from flipping bit ``k`` of ``a``."""
    a = np.asarray(a)
    field_k = q.linear.get(k, 0.0)
    for (i, j), v in q.quadratic.items():
        if i == k:
            field_k += v * a[j]
        elif j == k:
            field_k += v * a[i]
    return (1 - 2 * int(a[k])) * field_k


def qubo_to_ising(q: QuboProblem) -> IsingProblem:
    """Rewrite ``q`` over spins using ``x = (s + 1) / 2``."""
    h = {i: 0.5 * v for i, v in q.linear.items()}
    offset = q.offset + 0.5 * sum(q.linear.values())
    J = {}
    for (i, j), v in q.quadratic.items():
        J[(i, j)] = 0.25 * v
        h[i] = h.get(i, 0.0) + 0.25 * v
        h[j] = h.get(j, 0.0) + 0.25 * v
        offset += 0.25 * v
    return IsingProblem(q.num_vars, h, J, offset)


def ising_to_qubo(p: IsingProblem) -> QuboProblem:
    """Rewrite ``p`` over bits using ``s = 2x - 1``."""
    h = {i: 2.0 * v for i, v in p.linear.items()}
    offset = p.offset - sum(p.linear.values())
    J = {}
    for (i, j), v in p.quadratic.items():
        J[(i, j)] = 4.0 * v
        h[i] = h.get(i, 0.0) - 2.0 * v
        h[j] = h.get(j, 0.0) - 2.0 * v
        offset += v
    return QuboProblem(p.num_vars, h, J, offset)


def bits_to_spins(a) -> np.ndarray:
    return 2 * np.asarray(a, dtype=np.int64) - 1


def spins_to_bits(s) -> np.ndarray:
    return (np.asarray(s, dtype=np.int64) + 1) // 2
