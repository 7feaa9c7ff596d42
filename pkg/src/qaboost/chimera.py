"""Chimera hardware graphs, minor embeddings and chained problem construction.

Qubit ``8 * (row * m + col) + 4 * u + k`` is qubit ``k`` of shore ``u`` in
unit cell ``(row, col)``. Shore 0 qubits are vertical: they couple to the same
``k`` in the cells above and below. Shore 1 qubits are horizontal and couple
left and right. Inside a cell every shore-0 qubit couples to every shore-1
qubit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .qubo import QuboProblem


class EmbeddingError(ValueError):
    """An embedding does not satisfy the minor-embedding invariants."""


class UnsupportedGraphError(ValueError):
    pass


def qubit_index(m: int, row: int, col: int, shore: int, k: int) -> int:
    return 8 * (row * m + col) + 4 * shore + k


def qubit_coordinates(m: int, q: int) -> tuple[int, int, int, int]:
    cell, rest = divmod(q, 8)
    row, col = divmod(cell, m)
    shore, k = divmod(rest, 4)
    return row, col, shore, k


def chimera_couplers(m: int) -> list[tuple[int, int]]:
    """All couplers of a perfect ``m x m`` Chimera graph as sorted pairs."""
    edges = []
    for r in range(m):
        for c in range(m):
            for a in range(4):
                for b in range(4):
                    edges.append((qubit_index(m, r, c, 0, a), qubit_index(m, r, c, 1, b)))
            for k in range(4):
                if r + 1 < m:
                    edges.append((qubit_index(m, r, c, 0, k), qubit_index(m, r + 1, c, 0, k)))
                if c + 1 < m:
                    edges.append((qubit_index(m, r, c, 1, k), qubit_index(m, r, c + 1, 1, k)))
    return sorted(tuple(sorted(e)) for e in edges)


@dataclass(frozen=True)
class ChimeraGraph:
    m: int
    defective_qubits: frozenset = frozenset()
    defective_couplers: frozenset = frozenset()

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("grid size must be >= 1")
        n = 8 * self.m * self.m
        bad = sorted(q for q in self.defective_qubits if not 0 <= q < n)
        if bad:
            raise ValueError(f"defective qubit indices out of range: {bad}")
        valid = set(chimera_couplers(self.m))
        couplers = frozenset(tuple(sorted(map(int, e))) for e in self.defective_couplers)
        unknown = sorted(e for e in couplers if e not in valid)
        if unknown:
            raise ValueError(f"defective couplers are not Chimera couplers: {unknown}")
        object.__setattr__(self, "defective_qubits", frozenset(int(q) for q in self.defective_qubits))
        object.__setattr__(self, "defective_couplers", couplers)

    @property
    def num_qubits(self) -> int:
        """Size of the full qubit index space, working or not."""
        return 8 * self.m * self.m

    @cached_property
    def qubits(self) -> list[int]:
        return [q for q in range(self.num_qubits) if q not in self.defective_qubits]

    @cached_property
    def edges(self) -> list[tuple[int, int]]:
        return [
            e
            for e in chimera_couplers(self.m)
            if e not in self.defective_couplers
            and e[0] not in self.defective_qubits
            and e[1] not in self.defective_qubits
        ]

    @cached_property
    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.qubits)
        g.add_edges_from(self.edges)
        return g

    @property
    def is_perfect(self) -> bool:
        return not self.defective_qubits and not self.defective_couplers

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "defective_qubits": sorted(self.defective_qubits),
            "defective_couplers": [list(e) for e in sorted(self.defective_couplers)],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ChimeraGraph":
        return cls(
            int(data["m"]),
            frozenset(data.get("defective_qubits", ())),
            frozenset(tuple(e) for e in data.get("defective_couplers", ())),
        )


def build_chimera(m: int, defective_qubits: Iterable[int] = (), defective_couplers: Iterable = ()) -> ChimeraGraph:
    return ChimeraGraph(m, frozenset(defective_qubits), frozenset(tuple(e) for e in defective_couplers))


def random_defects(m: int, count: int, seed: int) -> ChimeraGraph:
    """Chimera graph with ``count`` uniformly chosen qubits removed."""
    rng = np.random.default_rng(seed)
    dead = rng.choice(8 * m * m, size=count, replace=False)
    return build_chimera(m, dead.tolist())


@dataclass(frozen=True)
class Embedding:
    """Logical variable -> chain of physical qubits."""

    chains: Mapping[int, frozenset] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(
            self, "chains", {int(v): frozenset(int(q) for q in c) for v, c in sorted(self.chains.items())}
        )

    def __len__(self):
        return len(self.chains)

    @property
    def num_qubits(self) -> int:
        return sum(len(c) for c in self.chains.values())

    @property
    def max_chain_length(self) -> int:
        return max((len(c) for c in self.chains.values()), default=0)

    def restrict(self, variables: Iterable[int]) -> "Embedding":
        return Embedding({v: self.chains[v] for v in variables})

    def to_dict(self) -> dict:
        return {"chains": {str(v): sorted(c) for v, c in self.chains.items()}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: Mapping) -> "Embedding":
        return cls({int(v): c for v, c in data["chains"].items()})


@dataclass
class EmbeddingReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def verify_embedding(problem_graph: nx.Graph, hardware: ChimeraGraph, emb: Embedding) -> EmbeddingReport:
    """Check disjointness, chain connectivity and edge coverage; report every violation."""
    report = EmbeddingReport()
    hw = hardware.graph
    for v in problem_graph.nodes:
        if not emb.chains.get(v):
            report.violations.append(f"variable {v}: missing or empty chain")
    owner: dict[int, int] = {}
    for v, chain in emb.chains.items():
        for q in sorted(chain):
            if q not in hw:
                report.violations.append(f"variable {v}: qubit {q} is not a working qubit")
            if q in owner:
                report.violations.append(f"disjointness: qubit {q} shared by variables {owner[q]} and {v}")
            else:
                owner[q] = v
        present = [q for q in chain if q in hw]
        if present and not nx.is_connected(hw.subgraph(present)):
            report.violations.append(f"connectivity: chain of variable {v} is disconnected")
    for u, v in problem_graph.edges:
        cu, cv = emb.chains.get(u, frozenset()), emb.chains.get(v, frozenset())
        if cu and cv and not any(hw.has_edge(a, b) for a in cu for b in cv if a in hw and b in hw):
            report.violations.append(f"coverage: no coupler between chains of {u} and {v}")
    return report


def clique_embed(graph: ChimeraGraph, n: int | None = None) -> Embedding:
    """Embed the complete graph ``K_{4m+1}`` (or its first ``n`` vertices) in a perfect ``C_m``.

    Lanes k = 0..2 use the triangular layout: chain ``(i, k)`` is horizontal
    qubit ``k`` along row ``i`` from column 0 to ``i`` joined at the diagonal
    cell to vertical qubit ``k`` down column ``i``. Lane 3 holds ``m + 1``
    chains, each taking exactly one lane-3 qubit from every row/column cross
    of the lower triangle: the bottom row, the first column, and ``m - 1``
    staircase chains bridged through one superdiagonal cell each. Chain
    lengths are at most ``m + 2``.
    """
    if not graph.is_perfect:
        raise UnsupportedGraphError("clique_embed requires a defect-free graph; use heuristic_embed")
    m = graph.m
    size = 4 * m + 1
    if n is None:
        n = size
    if not 0 <= n <= size:
        raise ValueError(f"C{m} holds at most K_{size}")

    def H(r, c, k):
        return qubit_index(m, r, c, 1, k)

    def V(r, c, k):
        return qubit_index(m, r, c, 0, k)

    chains = []
    for i in range(m):
        for k in range(3):
            chains.append({H(i, c, k) for c in range(i + 1)} | {V(r, i, k) for r in range(i, m)})
    chains.append({H(m - 1, c, 3) for c in range(m)})
    chains.append({V(r, 0, 3) for r in range(m)})
    for t in range(m - 1):
        chains.append(
            {H(t, c, 3) for c in range(t + 1)}
            | {H(t, t + 1, 3), V(t, t + 1, 3)}
            | {V(r, t + 1, 3) for r in range(t + 1, m)}
        )
    # shortest chains first so small problems avoid the bridged ones
    chains.sort(key=len)
    return Embedding({v: chains[v] for v in range(n)})


def smallest_clique_graph(n: int) -> ChimeraGraph:
    """Smallest perfect Chimera graph whose clique embedding holds ``n`` variables."""
    m = max(1, -(-(n - 1) // 4))
    return build_chimera(m)




def _chimera_symmetry(m: int, rng: np.random.Generator):
    """Random automorphism of the perfect ``C_m``: grid reflections, transpose, lane permutation."""
    flip_r, flip_c, transpose = rng.integers(0, 2, size=3)
    lanes = rng.permutation(4)

    def apply(q):
        r, c, u, k = qubit_coordinates(m, q)
        if flip_r:
            r = m - 1 - r
        if flip_c:
            c = m - 1 - c
        if transpose:
            r, c, u = c, r, 1 - u
        return qubit_index(m, r, c, u, int(lanes[k]))

    return apply


def _clique_seed(problem_graph, hardware, allowed, size, rng, placements=64):
    """Map variables onto a clique layout in a ``size x size`` window of the grid.

    ``placements`` random windows and symmetries are scored by how many
    layout chains avoid every defect; the best one is used. Intact chains are
    handed out shortest first and the remaining variables are left for regrowth.
    """
    m = hardware.m
    layout = [sorted(c) for c in clique_embed(build_chimera(size)).chains.values()]
    hw = hardware.graph
    best = None
    for _ in range(placements):
        apply = _chimera_symmetry(size, rng)
        dr, dc = rng.integers(0, m - size + 1, size=2)
        intact = []
        for chain in layout:
            placed = set()
            for q in chain:
                r, c, u, k = qubit_coordinates(size, apply(q))
                placed.add(qubit_index(m, r + dr, c + dc, u, k))
            if all(q in allowed for q in placed) and nx.is_connected(hw.subgraph(placed)):
                intact.append(placed)
        intact.sort(key=len)
        score = (min(len(intact), problem_graph.number_of_nodes()), -sum(map(len, intact)))
        if best is None or score > best[0]:
            best = (score, intact)
    variables = list(problem_graph.nodes)
    rng.shuffle(variables)
    return dict(zip(variables, best[1]))


def _trim_chains(problem_graph: nx.Graph, hw: nx.Graph, chains: dict) -> "Embedding":
    """Drop chain qubits one at a time while connectivity and edge coverage survive."""
    changed = True
    while changed:
        changed = False
        for v in sorted(chains, key=lambda v: -len(chains[v])):
            for q in sorted(chains[v]):
                if len(chains[v]) == 1:
                    break
                rest = chains[v] - {q}
                if not nx.is_connected(hw.subgraph(rest)):
                    continue
                if all(any(hw.has_edge(a, b) for a in rest for b in chains[u]) for u in problem_graph.neighbors(v)):
                    chains[v] = rest
                    changed = True
    return Embedding(chains)


def heuristic_embed(
    problem_graph: nx.Graph,
    hardware: ChimeraGraph,
    seed: int = 0,
    max_tries: int = 10,
    max_rounds: int = 60,
) -> Embedding | None:
    """Randomized chain-growth embedding; returns ``None`` after ``max_tries`` failed restarts.

    A chain is grown as the union of cheapest paths from a root qubit to the
    chains of already placed neighbours. Qubits may be shared while chains
    negotiate: a qubit's cost rises with its current sharing (with a pressure
    factor that grows every round) and with its sharing history, so contested
    qubits are eventually abandoned. Dense problems that fit the clique layout
    start from a randomly transformed clique embedding with the defect-hit
    chains removed; sparse ones start from breadth-first growth.
    """
    variables = list(problem_graph.nodes)
    if not variables:
        return Embedding({})
    hw = hardware.graph
    component = max(nx.connected_components(hw), key=len) if len(hw) else set()
    qubits = np.array(sorted(component))
    if len(variables) > len(qubits):
        return None
    pos = {q: i for i, q in enumerate(qubits)}
    rows, cols = [], []
    for a, b in hw.subgraph(component).edges:
        rows += [pos[a], pos[b]]
        cols += [pos[b], pos[a]]
    N = len(qubits)
    structure = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(N, N))
    structure.sort_indices()
    nbrs = {v: list(problem_graph.neighbors(v)) for v in variables}
    rng = np.random.default_rng(seed)
    n = len(variables)
    dense = n > 2 and problem_graph.number_of_edges() >= 0.5 * n * (n - 1) / 2
    fits_clique = n <= 4 * hardware.m + 1

    def grow(v, chains, weight):
        placed = [u for u in nbrs[v] if u in chains]
        if not placed:
            free = np.flatnonzero(weight == weight.min())
            return {int(rng.choice(free))}
        graph = csr_matrix((weight[structure.indices], structure.indices, structure.indptr), shape=(N, N))
        total = weight.copy()
        preds = []
        for u in placed:
            dist, pred, _ = dijkstra(graph, directed=True, indices=sorted(chains[u]), min_only=True,
                                     return_predecessors=True)
            # dist includes the root's own weight, which is paid once above
            total += np.maximum(dist - weight, 0.0)
            preds.append((u, pred))
        total *= 1.0 + 1e-6 * rng.random(N)
        root = int(np.argmin(total))
        chain = {root}
        for u, pred in preds:
            node = root
            while node >= 0 and node not in chains[u]:
                chain.add(int(node))
                node = pred[node]
        return chain

    for attempt in range(max_tries):
        chains: dict = {}
        usage = np.zeros(N, dtype=np.int64)
        history = np.zeros(N)
        pressure = 0.5
        if dense and fits_clique and attempt % 2 == 0:
            size = min(hardware.m, max(1, -(-(n - 1) // 4)) + attempt // 2)
            for v, chain in _clique_seed(problem_graph, hardware, pos, size, rng).items():
                chains[v] = {pos[q] for q in chain}
                usage[list(chains[v])] += 1
        start = variables[int(rng.integers(n))]
        order = list(nx.bfs_tree(problem_graph, start))
        order += [v for v in variables if v not in set(order)]
        for v in order:
            if v not in chains:
                chains[v] = grow(v, chains, (1.0 + history) * (1.0 + pressure * usage))
                usage[list(chains[v])] += 1
        best = None
        clean_rounds = 0
        for _round in range(max_rounds):
            if usage.max() <= 1:
                total = int(usage.sum())
                if best is None or total < best[0]:
                    best = (total, {v: set(c) for v, c in chains.items()})
                clean_rounds += 1
                if clean_rounds > 2:
                    break
            for idx in rng.permutation(n):
                v = variables[idx]
                if usage[list(chains[v])].max() <= 1:
                    continue
                usage[list(chains[v])] -= 1
                del chains[v]
                chains[v] = grow(v, chains, (1.0 + history) * (1.0 + pressure * usage))
                usage[list(chains[v])] += 1
            history += np.maximum(usage - 1, 0)
            pressure *= 1.5
        if best is not None:
            emb = _trim_chains(problem_graph, hw, {v: {int(qubits[i]) for i in c} for v, c in best[1].items()})
            if verify_embedding(problem_graph, hardware, emb).ok:
                return emb
    return None


@dataclass(frozen=True)
class EmbeddedQubo:
    """Physical problem over the qubits used by an embedding.

    Variable ``p`` of ``problem`` is physical qubit ``qubits[p]``; chains are
    laid out contiguously in logical-variable order. For any chain-consistent
    assignment, ``problem`` energy equals the logical energy plus
    ``chain_offset``.
    """

    problem: QuboProblem
    qubits: tuple
    chain_slices: tuple
    variables: tuple
    chain_offset: float
    chain_strength: float

    def to_qubit_map(self, bits) -> dict[int, int]:
        return {q: int(b) for q, b in zip(self.qubits, bits)}


def embed_problem(q: QuboProblem, emb: Embedding, chain_strength: float, hardware: ChimeraGraph) -> EmbeddedQubo:
    """Spread ``q`` over the chains of ``emb`` on ``hardware``.

    Biases are split equally over each chain; each coupling sits on the first
    coupler (in sorted order) joining the two chains; every coupler inside a
    chain carries the ferromagnetic Ising term ``-chain_strength * s_a * s_b``
    written in QUBO form.
    """
    report = verify_embedding(q.variable_graph(), hardware, emb)
    if not report.ok:
        raise EmbeddingError("; ".join(report.violations))
    variables = tuple(range(q.num_vars))
    qubits, slices = [], []
    for v in variables:
        chain = sorted(emb.chains[v])
        slices.append((len(qubits), len(qubits) + len(chain)))
        qubits.extend(chain)
    index = {qb: i for i, qb in enumerate(qubits)}
    hw = hardware.graph

    linear: dict[int, float] = {}
    quadratic: dict[tuple[int, int], float] = {}
    for v, h in q.linear.items():
        chain = sorted(emb.chains[v])
        for qb in chain:
            linear[index[qb]] = linear.get(index[qb], 0.0) + h / len(chain)
    for (u, v), J in q.quadratic.items():
        if J == 0.0:
            continue
        couplers = sorted(
            tuple(sorted((a, b))) for a in emb.chains[u] for b in emb.chains[v] if hw.has_edge(a, b)
        )
        a, b = couplers[0]
        key = tuple(sorted((index[a], index[b])))
        quadratic[key] = quadratic.get(key, 0.0) + J
    offset = q.offset
    chain_edges = 0
    for v in variables:
        chain = emb.chains[v]
        for a, b in sorted(tuple(sorted(e)) for e in hw.subgraph(chain).edges):
            i, j = sorted((index[a], index[b]))
            quadratic[(i, j)] = quadratic.get((i, j), 0.0) - 4.0 * chain_strength
            linear[i] = linear.get(i, 0.0) + 2.0 * chain_strength
            linear[j] = linear.get(j, 0.0) + 2.0 * chain_strength
            offset -= chain_strength
            chain_edges += 1
    return EmbeddedQubo(
        problem=QuboProblem(len(qubits), linear, quadratic, offset),
        qubits=tuple(qubits),
        chain_slices=tuple(slices),
        variables=variables,
        chain_offset=-chain_strength * chain_edges,
        chain_strength=float(chain_strength),
    )


def unembed_reads(reads: np.ndarray, embedded: EmbeddedQubo, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Majority-vote each chain for a batch of physical reads.

    Returns the logical states and each read's chain-break fraction. Exact ties
    take a coin drawn from ``seed``; one coin per (read, chain) is drawn
    whether or not it is used, so results do not depend on which chains tie.
    """
    reads = np.atleast_2d(np.asarray(reads, dtype=np.int64))
    rng = np.random.default_rng(seed)
    coins = rng.integers(0, 2, size=(reads.shape[0], len(embedded.chain_slices)))
    logical = np.zeros((reads.shape[0], len(embedded.chain_slices)), dtype=np.int8)
    broken = np.zeros((reads.shape[0], len(embedded.chain_slices)), dtype=bool)
    for v, (lo, hi) in enumerate(embedded.chain_slices):
        ones = reads[:, lo:hi].sum(axis=1)
        size = hi - lo
        logical[:, v] = np.where(2 * ones > size, 1, np.where(2 * ones < size, 0, coins[:, v]))
        broken[:, v] = (ones != 0) & (ones != size)
    frac = broken.mean(axis=1) if broken.shape[1] else np.zeros(reads.shape[0])
    return logical, frac


def unembed(sample: Mapping[int, int], emb: Embedding, seed: int = 0) -> tuple[np.ndarray, float]:
    """Majority vote per chain for one physical sample given as ``{qubit: bit}``.

    Returns ``(logical_bits, break_fraction)`` with logical bits ordered by
    variable index.
    """
    variables = sorted(emb.chains)
    rng = np.random.default_rng(seed)
    coins = rng.integers(0, 2, size=len(variables))
    bits = np.zeros(len(variables), dtype=np.int8)
    broken = 0
    for idx, v in enumerate(variables):
        values = [int(sample[q]) for q in sorted(emb.chains[v])]
        ones, size = sum(values), len(values)
        if 2 * ones > size:
            bits[idx] = 1
        elif 2 * ones < size:
            bits[idx] = 0
        else:
            bits[idx] = coins[idx]
        broken += 0 < ones < size
    return bits, broken / len(variables) if variables else 0.0
