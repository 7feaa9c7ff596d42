"""Optimization oracles for QUBO problems.

``brute_force_solve`` enumerates every assignment (Gray-code order, one bit
flip per step). ``simulated_anneal`` runs independent single-flip Metropolis
restarts. ``apply_ice`` and ``quantize_coefficients`` model how a device
misprograms the coefficients it is handed.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Literal

import numba
import numpy as np

from .qubo import IsingProblem, QuboProblem

MAX_BRUTE_FORCE_VARS = 25


class ProblemSizeError(ValueError):
    """Problem too large for exhaustive enumeration."""


@dataclass(frozen=True)
class SolverConfig:
    """Settings for the software oracles.

    ``t_start``/``t_end`` left as ``None`` are derived from the problem's
    coefficients: the hot end accepts the largest possible uphill move with
    probability 1/2, the cold end accepts the smallest nonzero coefficient
    move with probability 1/100.
    """

    kind: Literal["brute_force", "simulated_annealing"] = "simulated_annealing"
    num_reads: int = 32
    sweeps_per_read: int = 400
    t_start: float | None = None
    t_end: float | None = None
    shape: Literal["geometric", "linear"] = "geometric"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("brute_force", "simulated_annealing"):
            raise ValueError(f"unknown solver kind {self.kind!r}")
        if self.num_reads < 1:
            raise ValueError("num_reads must be >= 1")
        if self.sweeps_per_read < 1:
            raise ValueError("sweeps_per_read must be >= 1")
        if self.shape not in ("geometric", "linear"):
            raise ValueError(f"unknown schedule shape {self.shape!r}")
        if (self.t_start is None) != (self.t_end is None):
            raise ValueError("t_start and t_end must be given together")
        if self.t_start is not None and not (self.t_start > self.t_end > 0):
            raise ValueError("temperatures must satisfy t_start > t_end > 0")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def with_seed(self, seed: int) -> "SolverConfig":
        return SolverConfig(**{**asdict(self), "seed": int(seed)})

    @classmethod
    def from_dict(cls, data: dict) -> "SolverConfig":
        return cls(**data)


@dataclass(frozen=True)
class IceModel:
    """Intrinsic control error: zero-mean Gaussian misprogramming of every coefficient.

    Ranges are the full programmable spans (h in [-2, 2], J in [-1, 1] by
    default), so the noise std is ``noise_std_fraction * range``.
    """

    noise_std_fraction: float = 0.05
    h_full_range: float = 4.0
    j_full_range: float = 2.0
    quantization_step_fraction: float | None = None

    def __post_init__(self):
        if not 0 <= self.noise_std_fraction < 1:
            raise ValueError("noise_std_fraction must lie in [0, 1)")
        if self.h_full_range <= 0 or self.j_full_range <= 0:
            raise ValueError("full ranges must be positive")
        if self.quantization_step_fraction is not None and self.quantization_step_fraction <= 0:
            raise ValueError("quantization_step_fraction must be positive")

    @property
    def h_std(self) -> float:
        return self.noise_std_fraction * self.h_full_range

    @property
    def j_std(self) -> float:
        return self.noise_std_fraction * self.j_full_range


@dataclass
class SampleSet:
    """Distinct assignments sorted by ascending energy.

    ``chain_break_fraction`` is per distinct assignment (mean over the reads
    that produced it) and only present for samples that went through an
    embedding.
    """

    states: np.ndarray
    energies: np.ndarray
    num_occurrences: np.ndarray
    chain_break_fraction: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    @classmethod
    def from_reads(cls, problem: QuboProblem, reads: np.ndarray, breaks=None, info=None) -> "SampleSet":
        reads = np.asarray(reads, dtype=np.int8)
        if reads.ndim == 1:
            reads = reads[None, :]
        uniq, inverse, counts = np.unique(reads, axis=0, return_inverse=True, return_counts=True)
        inverse = inverse.reshape(-1)
        energies = problem.energies(uniq) if len(uniq) else np.zeros(0)
        cbf = None
        if breaks is not None:
            breaks = np.asarray(breaks, dtype=float)
            cbf = np.bincount(inverse, weights=breaks, minlength=len(uniq)) / counts
        # np.unique sorts rows lexicographically; stable sort keeps that as the tie-break
        order = np.argsort(energies, kind="stable")
        return cls(
            states=uniq[order],
            energies=np.asarray(energies)[order],
            num_occurrences=counts[order],
            chain_break_fraction=None if cbf is None else cbf[order],
            info=dict(info or {}),
        )

    def __len__(self):
        return len(self.energies)

    @property
    def first(self) -> tuple[np.ndarray, float]:
        return self.states[0], float(self.energies[0])

    @property
    def lowest_energy(self) -> float:
        return float(self.energies[0])

    def to_dict(self) -> dict:
        out = {
            "samples": [
                {
                    "assignment": "".join(str(int(b)) for b in s),
                    "energy": float(e),
                    "num_occurrences": int(c),
                }
                for s, e, c in zip(self.states, self.energies, self.num_occurrences)
            ],
            "info": self.info,
        }
        if self.chain_break_fraction is not None:
            for rec, b in zip(out["samples"], self.chain_break_fraction):
                rec["chain_break_fraction"] = float(b)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _dense_symmetric(q: QuboProblem) -> tuple[np.ndarray, np.ndarray]:
    h, J = q.dense()
    return h, J + J.T


@numba.njit(cache=True)
def _gray_min(h, W):
    n = h.shape[0]
    x = np.zeros(n, dtype=np.int8)
    local = h.copy()
    e = 0.0
    best = 0.0
    for k in range(1, 1 << n):
        b = 0
        while not (k >> b) & 1:
            b += 1
        if x[b] == 0:
            e += local[b]
            x[b] = 1
            for j in range(n):
                local[j] += W[j, b]
        else:
            e -= local[b]
            x[b] = 0
            for j in range(n):
                local[j] -= W[j, b]
        if e < best:
            best = e
    return best


@numba.njit(cache=True)
def _gray_collect(h, W, threshold, cap):
    n = h.shape[0]
    x = np.zeros(n, dtype=np.int8)
    local = h.copy()
    e = 0.0
    found = np.zeros((cap, n), dtype=np.int8)
    count = 0
    total = 0
    if e <= threshold:
        count = 1
        total = 1
    for k in range(1, 1 << n):
        b = 0
        while not (k >> b) & 1:
            b += 1
        if x[b] == 0:
            e += local[b]
            x[b] = 1
            for j in range(n):
                local[j] += W[j, b]
        else:
            e -= local[b]
            x[b] = 0
            for j in range(n):
                local[j] -= W[j, b]
        if e <= threshold:
            if count < cap:
                found[count, :] = x
                count += 1
            total += 1
    return found[:count], total


def brute_force_solve(q: QuboProblem, max_ties: int = 4096) -> SampleSet:
    """Exhaustively minimize ``q``; every tied ground state is returned (up to ``max_ties``).

    Raises
    ------
    ProblemSizeError
        If ``q`` has more than 25 variables.
    """
    n = q.num_vars
    if n > MAX_BRUTE_FORCE_VARS:
        raise ProblemSizeError(f"brute force limited to {MAX_BRUTE_FORCE_VARS} variables, got {n}")
    if n == 0:
        return SampleSet(np.zeros((1, 0), dtype=np.int8), np.array([q.offset]), np.array([1]))
    h, W = _dense_symmetric(q)
    scale = 1.0 + np.abs(h).sum() + np.abs(W).sum() / 2
    best = _gray_min(h, W)
    candidates, total = _gray_collect(h, W, best + 1e-7 * scale, max_ties)
    energies = q.energies(candidates)
    keep = candidates[energies <= energies.min() + 1e-9]
    samples = SampleSet.from_reads(q, keep, info={"solver": "brute_force"})
    samples.info["ties_truncated"] = bool(total > max_ties)
    return samples


@numba.njit(cache=True)
def _anneal(h, W, betas, seeds):
    n = h.shape[0]
    reads = seeds.shape[0]
    out = np.zeros((reads, n), dtype=np.int8)
    for r in range(reads):
        np.random.seed(seeds[r])
        x = np.zeros(n, dtype=np.int8)
        for i in range(n):
            if np.random.random() < 0.5:
                x[i] = 1
        local = h.copy()
        e = 0.0
        for i in range(n):
            if x[i] == 1:
                e += h[i]
                for j in range(n):
                    local[j] += W[j, i]
        for i in range(n):
            for j in range(i + 1, n):
                if x[i] == 1 and x[j] == 1:
                    e += W[i, j]
        best_e = e
        best = x.copy()
        for beta in betas:
            for i in range(n):
                delta = local[i] if x[i] == 0 else -local[i]
                if delta <= 0.0 or np.random.random() < math.exp(-beta * delta):
                    if x[i] == 0:
                        x[i] = 1
                        for j in range(n):
                            local[j] += W[j, i]
                    else:
                        x[i] = 0
                        for j in range(n):
                            local[j] -= W[j, i]
                    e += delta
                    if e < best_e - 1e-12:
                        best_e = e
                        best[:] = x
        out[r, :] = best
    return out


def default_temperatures(q: QuboProblem) -> tuple[float, float]:
    """Problem-derived ``(t_start, t_end)`` used when the config leaves them unset."""
    h, W = _dense_symmetric(q)
    max_delta = float(np.max(np.abs(h) + np.abs(W).sum(axis=1), initial=0.0))
    nonzero = np.concatenate([np.abs(h[h != 0]), np.abs(W[W != 0])])
    if max_delta == 0.0 or len(nonzero) == 0:
        return 1.0, 0.1
    t_start = max_delta / math.log(2.0)
    t_end = max(float(nonzero.min()) / math.log(100.0), t_start * 1e-4)
    return t_start, min(t_end, t_start / 2)


def temperature_schedule(cfg: SolverConfig, q: QuboProblem) -> np.ndarray:
    if cfg.t_start is None:
        t0, t1 = default_temperatures(q)
    else:
        t0, t1 = cfg.t_start, cfg.t_end
    if cfg.shape == "geometric":
        temps = np.geomspace(t0, t1, cfg.sweeps_per_read)
    else:
        temps = np.linspace(t0, t1, cfg.sweeps_per_read)
    return 1.0 / temps


def read_seeds(seed: int, count: int) -> np.ndarray:
    """One independent 32-bit stream seed per read, derived from ``seed``."""
    return np.random.SeedSequence(seed).generate_state(count, dtype=np.uint32).astype(np.int64)


def anneal_reads(q: QuboProblem, cfg: SolverConfig) -> np.ndarray:
    """Raw per-read best states, one row per read, in read order."""
    h, W = _dense_symmetric(q)
    return _anneal(h, W, temperature_schedule(cfg, q), read_seeds(cfg.seed, cfg.num_reads))


def simulated_anneal(q: QuboProblem, cfg: SolverConfig) -> SampleSet:
    """Single-flip Metropolis annealing; each read restarts from a random state."""
    reads = anneal_reads(q, cfg)
    return SampleSet.from_reads(q, reads, info={"solver": "simulated_annealing", "num_reads": cfg.num_reads})


def solve(q: QuboProblem, cfg: SolverConfig) -> SampleSet:
    if cfg.kind == "brute_force":
        return brute_force_solve(q)
    return simulated_anneal(q, cfg)


def _round_half_away(values: np.ndarray, step: float) -> np.ndarray:
    r = np.abs(values) / step
    n = np.floor(r)
    n = np.where(r - n >= 0.5 - 1e-9, n + 1, n)
    return np.sign(values) * n * step


def quantize_coefficients(q, step: float, j_step: float | None = None):
    """Round every coefficient to the nearest multiple of ``step``, ties away from zero.

    ``j_step`` sets a separate grid for couplings; the offset is untouched.
    """
    if step <= 0 or (j_step is not None and j_step <= 0):
        raise ValueError("quantization step must be positive")
    j_step = step if j_step is None else j_step
    lin_keys = list(q.linear)
    quad_keys = list(q.quadratic)
    lin = _round_half_away(np.array([q.linear[k] for k in lin_keys], dtype=float), step)
    quad = _round_half_away(np.array([q.quadratic[k] for k in quad_keys], dtype=float), j_step)
    return q.replace(linear=dict(zip(lin_keys, lin.tolist())), quadratic=dict(zip(quad_keys, quad.tolist())))


def apply_ice(q, ice: IceModel, seed) -> QuboProblem | IsingProblem:
    """Add independent zero-mean Gaussian noise to every bias and every coupling.

    All ``num_vars`` biases are perturbed, including ones stored as zero, since
    a device programs every qubit. Works on either problem form.
    """
    if ice.noise_std_fraction == 0:
        return q
    rng = np.random.default_rng(seed)
    h_noise = rng.normal(0.0, ice.h_std, size=q.num_vars)
    quad_keys = list(q.quadratic)
    j_noise = rng.normal(0.0, ice.j_std, size=len(quad_keys))
    linear = {i: q.linear.get(i, 0.0) + float(h_noise[i]) for i in range(q.num_vars)}
    quadratic = {k: q.quadratic[k] + float(d) for k, d in zip(quad_keys, j_noise)}
    return q.replace(linear=linear, quadratic=quadratic)
