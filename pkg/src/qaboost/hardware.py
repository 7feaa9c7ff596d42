"""Emulated annealer: embed, misprogram, anneal, unembed.

``solve_hardware_model`` is the full device pipeline for one chain strength;
``chain_strength_sweep`` retries it over a grid of chain strengths and keeps
the first one that neither breaks chains nor loses energy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chimera import ChimeraGraph, Embedding, EmbeddingError, embed_problem, unembed_reads
from .qubo import QuboProblem, ising_to_qubo, qubo_to_ising
from .solvers import (
    MAX_BRUTE_FORCE_VARS,
    IceModel,
    SampleSet,
    SolverConfig,
    anneal_reads,
    apply_ice,
    brute_force_solve,
    quantize_coefficients,
)

DEFAULT_BREAK_THRESHOLD = 0.05


def program_device(physical: QuboProblem, ice: IceModel | None, seed) -> QuboProblem:
    """Return the problem the device actually realizes.

    The physical problem is rewritten in spin form and scaled so its biases
    and couplings fill the programmable ranges; coefficients are then
    optionally quantized and perturbed by ICE noise. Uniform scaling does not
    move the minimizer, so the result is mapped back to QUBO form unscaled.
    """
    if ice is None:
        return physical
    spin = qubo_to_ising(physical)
    h_max = max((abs(v) for v in spin.linear.values()), default=0.0)
    j_max = max((abs(v) for v in spin.quadratic.values()), default=0.0)
    scale = max(h_max / (ice.h_full_range / 2), j_max / (ice.j_full_range / 2))
    if scale == 0.0:
        scale = 1.0
    spin = spin.replace(
        linear={i: v / scale for i, v in spin.linear.items()},
        quadratic={k: v / scale for k, v in spin.quadratic.items()},
        offset=spin.offset / scale,
    )
    if ice.quantization_step_fraction is not None:
        spin = quantize_coefficients(
            spin,
            ice.quantization_step_fraction * ice.h_full_range,
            ice.quantization_step_fraction * ice.j_full_range,
        )
    spin = apply_ice(spin, ice, seed)
    return ising_to_qubo(spin)


def solve_hardware_model(
    q: QuboProblem,
    graph: ChimeraGraph,
    emb: Embedding,
    chain_strength: float,
    ice: IceModel | None,
    cfg: SolverConfig,
) -> SampleSet:
    """Solve ``q`` as the emulated device would and return logical samples.

    Logical energies are re-evaluated against ``q`` itself, not the noisy
    physical problem. ``info["chain_break_fraction"]`` is the mean over reads.

    Raises
    ------
    EmbeddingError
        If ``emb`` is not a valid embedding of ``q`` into ``graph``.
    """
    embedded = embed_problem(q, emb, chain_strength, graph)
    ice_seed, tie_seed = np.random.SeedSequence(cfg.seed).generate_state(2)
    programmed = program_device(embedded.problem, ice, int(ice_seed))
    if cfg.kind == "brute_force" and programmed.num_vars <= MAX_BRUTE_FORCE_VARS:
        reads = brute_force_solve(programmed).states[:1]
    else:
        reads = anneal_reads(programmed, cfg)
    logical, breaks = unembed_reads(reads, embedded, int(tie_seed))
    return SampleSet.from_reads(
        q,
        logical,
        breaks,
        info={
            "solver": "hardware_model",
            "chain_strength": float(chain_strength),
            "chain_break_fraction": float(np.mean(breaks)),
            "physical_qubits": len(embedded.qubits),
        },
    )


@dataclass
class SweepResult:
    """Outcome of a chain-strength sweep.

    ``chain_strength`` is ``None`` when no grid value qualified; ``samples``
    then holds the lowest-energy result seen anywhere on the grid.
    """

    chain_strength: float | None
    samples: SampleSet
    diagnostics: list[dict] = field(default_factory=list)

    @property
    def exhausted(self) -> bool:
        return self.chain_strength is None


def chain_strength_sweep(
    q: QuboProblem,
    graph: ChimeraGraph,
    emb: Embedding,
    grid,
    ice: IceModel | None,
    cfg: SolverConfig,
    break_threshold: float = DEFAULT_BREAK_THRESHOLD,
) -> SweepResult:
    """Solve at every chain strength in ascending ``grid`` and pick one.

    A grid value qualifies when its best sample's chain-break fraction is at
    most ``break_threshold``. The winner is the smallest qualifying value whose
    best logical energy equals the lowest among qualifying values.
    """
    grid = [float(a) for a in grid]
    if not grid:
        raise ValueError("chain strength grid is empty")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("chain strength grid must be ascending")
    results = []
    seeds = np.random.SeedSequence(cfg.seed).generate_state(len(grid))
    for alpha, s in zip(grid, seeds):
        samples = solve_hardware_model(q, graph, emb, alpha, ice, cfg.with_seed(int(s)))
        best_break = float(samples.chain_break_fraction[0])
        results.append((alpha, samples, best_break))
    diagnostics = [
        {
            "chain_strength": a,
            "best_energy": s.lowest_energy,
            "best_break_fraction": b,
            "mean_break_fraction": s.info["chain_break_fraction"],
        }
        for a, s, b in results
    ]
    qualifying = [(a, s) for a, s, b in results if b <= break_threshold]
    if not qualifying:
        fallback = min(results, key=lambda r: (r[1].lowest_energy, r[0]))[1]
        return SweepResult(None, fallback, diagnostics)
    lowest = min(s.lowest_energy for _, s in qualifying)
    tol = 1e-9 * max(1.0, abs(lowest))
    alpha, samples = next((a, s) for a, s in qualifying if s.lowest_energy <= lowest + tol)
    return SweepResult(alpha, samples, diagnostics)


__all__ = [
    "EmbeddingError",
    "SweepResult",
    "chain_strength_sweep",
    "program_device",
    "solve_hardware_model",
]
