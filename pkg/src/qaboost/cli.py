"""Command line entry point: ``qaboost {names,linsep,seizure,solve,embed}``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import networkx as nx

from .chimera import (
    ChimeraGraph,
    Embedding,
    build_chimera,
    clique_embed,
    heuristic_embed,
    random_defects,
    verify_embedding,
)
from .experiments import (
    LinsepConfig,
    NamesConfig,
    SeizureConfig,
    default_output_root,
    run_linsep,
    run_names,
    run_seizure,
    with_oracle,
)
from .hardware import chain_strength_sweep
from .qubo import QuboProblem
from .solvers import IceModel, SolverConfig, brute_force_solve, simulated_anneal

ORACLES = {"brute": "brute", "sa": "sa", "hw": "hw"}


class InputError(ValueError):
    """Malformed input file; the message carries file and line context."""


def load_json(path) -> dict:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        line = text.splitlines()[exc.lineno - 1] if exc.lineno - 1 < len(text.splitlines()) else ""
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {line}") from exc


def load_problem(path) -> QuboProblem:
    data = load_json(path)
    try:
        return QuboProblem.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: not a valid QUBO problem: {exc}") from exc


def load_problem_graph(path) -> nx.Graph:
    """A QUBO file's variable graph, or a plain ``{"nodes": [...], "edges": [[u, v], ...]}`` graph."""
    data = load_json(path)
    if "edges" in data:
        g = nx.Graph()
        g.add_nodes_from(int(v) for v in data.get("nodes", []))
        g.add_edges_from((int(u), int(v)) for u, v in data["edges"])
        return g
    return load_problem(path).variable_graph()


def _emit(obj, out) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- experiments


def _experiment(args, cfg_cls, runner, name):
    cfg = cfg_cls()
    if args.config:
        try:
            cfg = cfg_cls.from_dict(load_json(args.config))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"{args.config}: invalid {name} config: {exc}") from exc
    if args.seed is not None:
        if cfg_cls is NamesConfig:
            cfg = replace(cfg, seeds=(args.seed,))
        else:
            cfg = replace(cfg, seed=args.seed)
    if args.oracle:
        cfg = with_oracle(cfg, ORACLES[args.oracle])
    if args.folds is not None and hasattr(cfg, "folds"):
        cfg = replace(cfg, folds=args.folds)
    out = Path(args.output) if args.output else default_output_root() / name
    runner(cfg, out, plots=not args.no_plots)
    print(f"wrote {name} results to {out}")
    return 0


def cmd_names(args):
    return _experiment(args, NamesConfig, run_names, "names")


def cmd_linsep(args):
    return _experiment(args, LinsepConfig, run_linsep, "linsep")


def cmd_seizure(args):
    return _experiment(args, SeizureConfig, run_seizure, "seizure")


# ---------------------------------------------------------------- solve / embed


def cmd_solve(args):
    q = load_problem(args.problem)
    if args.solver == "brute":
        samples = brute_force_solve(q)
    else:
        samples = simulated_anneal(q, SolverConfig(num_reads=args.reads, sweeps_per_read=args.sweeps, seed=args.seed or 0))
    _emit(samples.to_dict(), args.out)
    return 0


def _graph_from_args(args) -> ChimeraGraph:
    if args.graph:
        return ChimeraGraph.from_dict(load_json(args.graph))
    if args.m is None:
        raise InputError("give --graph FILE or --m M")
    if args.defects:
        return random_defects(args.m, args.defects, args.defect_seed)
    return build_chimera(args.m)


def cmd_embed(args):
    if args.action == "verify":
        if not (args.problem and args.embedding):
            raise InputError("embed verify needs --problem and --embedding")
        report = verify_embedding(
            load_problem_graph(args.problem), _graph_from_args(args), Embedding.from_dict(load_json(args.embedding))
        )
        _emit({"ok": report.ok, "violations": report.violations}, args.out)
        return 0 if report.ok else 1
    if args.action == "sweep":
        if not (args.problem and args.embedding):
            raise InputError("embed sweep needs --problem and --embedding")
        q = load_problem(args.problem)
        graph = _graph_from_args(args)
        emb = Embedding.from_dict(load_json(args.embedding))
        ice = None if args.no_ice else IceModel()
        cfg = SolverConfig(num_reads=args.reads, sweeps_per_read=args.sweeps, seed=args.seed or 0)
        result = chain_strength_sweep(q, graph, emb, args.grid, ice, cfg)
        _emit(
            {
                "chain_strength": result.chain_strength,
                "exhausted": result.exhausted,
                "diagnostics": result.diagnostics,
                "best": result.samples.to_dict()["samples"][0],
            },
            args.out,
        )
        return 0
    if args.clique is not None:
        graph = build_chimera(args.clique)
        emb = clique_embed(graph, args.n)
    elif args.heuristic:
        graph = _graph_from_args(args)
        emb = heuristic_embed(load_problem_graph(args.heuristic), graph, seed=args.seed or 0, max_tries=args.tries)
        if emb is None:
            _emit({"found": False}, args.out)
            return 1
    else:
        raise InputError("embed needs --clique M, --heuristic FILE, verify or sweep")
    _emit({"graph": graph.to_dict(), **emb.to_dict(), "num_qubits": emb.num_qubits}, args.out)
    if args.plot:
        from .plotting import embedding_plot

        embedding_plot(graph, emb).savefig(args.plot, dpi=120)
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qaboost", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def experiment(name, fn, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--seed", type=int, help="master seed")
        sp.add_argument("--oracle", choices=sorted(ORACLES), help="QUBO oracle for QBoost")
        sp.add_argument("--folds", type=int, help="cross-validation folds")
        sp.add_argument("--output", help=f"output directory (default: ${'{'}QABOOST_OUTPUT{'}'}/{name})")
        sp.add_argument("--no-plots", action="store_true", help="skip PNG figures")
        sp.set_defaults(func=fn)

    experiment("names", cmd_names, "names corpus: QBoost, RQBoost and random forest AUC")
    experiment("linsep", cmd_linsep, "bait-column separability experiment")
    experiment("seizure", cmd_seizure, "synthetic EEG feature pipeline and AUC distributions")

    sp = sub.add_parser("solve", help="solve a QUBO JSON file")
    sp.add_argument("problem")
    sp.add_argument("--solver", choices=["brute", "sa"], default="brute")
    sp.add_argument("--reads", type=int, default=32)
    sp.add_argument("--sweeps", type=int, default=400)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("embed", help="Chimera embedding utilities")
    sp.add_argument("action", nargs="?", choices=["verify", "sweep"])
    sp.add_argument("--clique", type=int, metavar="M", help="clique embedding on perfect C_M")
    sp.add_argument("--n", type=int, help="clique size (default 4M+1)")
    sp.add_argument("--heuristic", metavar="PROBLEM", help="heuristic embedding of a problem file")
    sp.add_argument("--problem")
    sp.add_argument("--embedding")
    sp.add_argument("--graph", help="Chimera graph JSON")
    sp.add_argument("--m", type=int, help="Chimera size when no --graph is given")
    sp.add_argument("--defects", type=int, default=0)
    sp.add_argument("--defect-seed", type=int, default=0)
    sp.add_argument("--tries", type=int, default=10)
    sp.add_argument("--grid", type=float, nargs="+", default=[0.5, 1.0, 2.0, 4.0])
    sp.add_argument("--no-ice", action="store_true")
    sp.add_argument("--reads", type=int, default=32)
    sp.add_argument("--sweeps", type=int, default=400)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--plot", help="write a PNG of the embedding")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_embed)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
