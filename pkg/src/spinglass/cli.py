"""Command-line entry point: ``spinglass <command> ...``.

Exit codes: 0 success, 1 a validation report failed, 2 bad input or usage,
3 a sizing cap refused the request, 4 the solver failed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import InstanceFormatError, SizingError

__all__ = ["main", "RunManifest", "build_parser"]

EXIT_OK, EXIT_INVALID, EXIT_USAGE, EXIT_SIZING, EXIT_SOLVER = 0, 1, 2, 3, 4


@dataclass
class RunManifest:
    """Provenance of one result file."""

    command: str
    parameters: dict
    inputs: dict = field(default_factory=dict)
    seed: int | None = None
    version: str = __version__
    wall_time: float = 0.0

    def add_input(self, path) -> None:
        with open(path, "rb") as fh:
            self.inputs[os.path.basename(str(path))] = "sha256:" + hashlib.sha256(fh.read()).hexdigest()

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "parameters": self.parameters,
            "inputs": self.inputs,
            "seed": self.seed,
            "version": self.version,
            "wall_time": self.wall_time,
        }


class _UsageError(Exception):
    pass


class _ArgParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def _params(args) -> dict:
    skip = {"func", "command", "output", "format"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip and not k.startswith("_")}


def _emit(args, payload: dict, manifest: RunManifest, text: str | None = None) -> None:
    manifest.wall_time = round(time.perf_counter() - args._t0, 6)
    payload = dict(payload)
    payload["manifest"] = manifest.to_dict()
    if getattr(args, "format", "json") == "text" and text is not None:
        out = text if text.endswith("\n") else text + "\n"
    else:
        out = json.dumps(payload, indent=2, sort_keys=False) + "\n"
    if getattr(args, "output", None):
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)


def _spectrum_text(spec, n) -> str:
    lines = [f"{'energy':>14}  state"]
    for e, w in spec.entries:
        lines.append(f"{e:>14.10g}  {int(w):0{max(n, 1)}b}")
    return "\n".join(lines)


# ---------------------------------------------------------------- solve


def _ladder(args, count):
    from .heuristics import BetaLadder

    lo = args.beta_min if args.beta_min is not None else 0.1
    hi = args.beta_max if args.beta_max is not None else 3.0
    return BetaLadder.geometric(lo, hi, count)


def _cmd_solve(args) -> int:
    from .bruteforce import SearchConfig, ground_search_gray, spectrum_search
    from .heuristics import BetaLadder, default_annealing_ladder, parallel_tempering, simulated_annealing
    from .model import Spectrum, enumerate_spectrum_naive, qubo_to_ising, read_instance

    inst = read_instance(args.instance, kind=args.kind)
    man = RunManifest("solve", _params(args), seed=args.seed)
    man.add_input(args.instance)
    cfg = SearchConfig(M=args.chunk_exp, k=args.k, workers=args.workers, K=args.cache_depth, l=args.fix)
    payload = {"solver": args.solver, "kind": args.kind, "n": inst.n}
    if args.solver in ("sa", "pt"):
        if args.seed is None:
            raise _UsageError(f"--seed is required for solver {args.solver}")
        if args.solver == "sa":
            if args.beta_min is not None or args.beta_max is not None:
                ladder = _ladder(args, 20)
            elif args.beta is None:
                ladder = default_annealing_ladder()
            else:
                ladder = BetaLadder(tuple(sorted(args.beta)))
            res = simulated_annealing(inst, args.sweeps, ladder, args.restarts, args.seed, workers=args.workers)
        else:
            if args.beta is not None and args.beta_min is None and args.beta_max is None:
                ladder = BetaLadder(tuple(sorted(args.beta)))
            else:
                ladder = _ladder(args, args.replicas)
            res = parallel_tempering(inst, ladder, args.sweeps, args.seed, workers=args.workers)
        payload["result"] = res.to_dict()
        text = f"best energy {res.best_energy:.10g} state {res.best_state:0{inst.n}b}"
        _emit(args, payload, man, text)
        return EXIT_OK
    if args.solver == "naive":
        spec = enumerate_spectrum_naive(inst, args.k)
    elif args.solver == "chunked":
        spec = spectrum_search(inst, cfg)
    elif args.solver == "gray":
        word, e = ground_search_gray(inst, cfg)
        spec = Spectrum(np.array([e]), np.array([word], dtype=np.uint64))
    elif args.solver in ("tn", "mps"):
        ising = qubo_to_ising(inst) if args.kind == "qubo" else inst
        if args.solver == "tn":
            from .tn import ClusterLattice, TnConfig, branch_and_bound, read_cluster_map

            if args.clusters:
                lat = read_cluster_map(args.clusters, ising)
                man.add_input(args.clusters)
            elif args.lattice:
                r, c = (int(x) for x in args.lattice.lower().split("x"))
                lat = ClusterLattice.grid(ising, r, c)
            else:
                raise _UsageError("solver tn needs --clusters or --lattice RxC")
            tc = TnConfig(beta=args.beta[0] if args.beta else 3.0, chi=args.chi, cutoff=args.cutoff,
                          max_branches=args.max_branches, k=args.k)
            res = branch_and_bound(lat, tc)
        else:
            from .tn import mps_imaginary_time

            res = mps_imaginary_time(ising, args.bond, args.beta[0] if args.beta else 1.0, args.dbeta,
                                     k=args.k, cutoff=args.cutoff, max_branches=args.max_branches)
        spec = res.spectrum
        payload["diagnostics"] = dict(res.diagnostics(), certified=bool(res.certified))
    else:
        raise _UsageError(f"unknown solver {args.solver}")
    payload["spectrum"] = spec.to_dict()
    _emit(args, payload, man, _spectrum_text(spec, inst.n))
    return EXIT_OK


def _cmd_convert(args) -> int:
    from .model import IsingInstance, ising_to_qubo, qubo_to_ising, read_instance, write_instance

    inst = read_instance(args.instance, kind=args.kind)
    if args.to == "qubo":
        out = ising_to_qubo(inst) if isinstance(inst, IsingInstance) else inst
    else:
        out = inst if isinstance(inst, IsingInstance) else qubo_to_ising(inst)
    text = write_instance(out)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------- railway


def _railway_problem(args):
    from .railway import DispatchProblem, load_problem

    p = load_problem(args.problem)
    if args.dmax is not None or args.p_pair is not None or args.p_sum is not None:
        p = DispatchProblem(
            p.network, p.timetable, p.entry_delays,
            args.dmax if args.dmax is not None else p.d_max, p.weights,
            args.p_pair if args.p_pair is not None else p.p_pair,
            args.p_sum if args.p_sum is not None else p.p_sum,
        )
    return p


def _delays_json(delays) -> list:
    return [{"train": t, "station": s, "delay": int(d)} for (t, s), d in sorted(delays.items())]


def _cmd_railway(args) -> int:
    from .model import write_instance
    from .railway import (
        assemble_qubo,
        decode_schedule,
        exact_onehot_search,
        onehot_branch_and_bound,
        validate_schedule,
    )

    p = _railway_problem(args)
    man = RunManifest(f"railway {args.action}", _params(args))
    man.add_input(args.problem)
    if args.action == "compile":
        q, vmap = assemble_qubo(p)
        payload = {"variables": q.n, "groups": len(vmap.groups), "variable_map": vmap.to_dict(),
                   "qubo": write_instance(q)}
        if args.qubo_out:
            with open(args.qubo_out, "w", encoding="utf-8") as fh:
                fh.write(payload["qubo"])
        _emit(args, payload, man, f"{q.n} variables in {len(vmap.groups)} one-hot groups")
        return EXIT_OK
    if args.action == "solve":
        q, vmap = assemble_qubo(p)
        if args.oracle == "onehot":
            e, w = exact_onehot_search(p, 1, qubo=(q, vmap)).ground
        elif args.oracle == "bnb":
            e, w = onehot_branch_and_bound(p, 1, qubo=(q, vmap)).ground
        else:
            from .bruteforce import SearchConfig, spectrum_search

            e, w = spectrum_search(q, SearchConfig(k=1, workers=args.workers)).ground
        delays = decode_schedule(int(w), vmap)
        report = validate_schedule(p, delays)
        payload = {"energy": float(e), "state": int(w), "delays": _delays_json(delays), "report": report}
        _emit(args, payload, man, "\n".join(f"{t}@{s}: {d}" for (t, s), d in sorted(delays.items())))
        return EXIT_OK if report["passed"] else EXIT_INVALID
    with open(args.delays, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceFormatError(f"{args.delays}: {exc}") from exc
    man.add_input(args.delays)
    rows = raw["delays"] if isinstance(raw, dict) else raw
    try:
        delays = {(str(r["train"]), int(r["station"])): int(r["delay"]) for r in rows}
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceFormatError(f"{args.delays}: bad delay table") from exc
    try:
        report = validate_schedule(p, delays)
    except KeyError as exc:
        raise InstanceFormatError(str(exc)) from exc
    failed = [k for k, v in report["conditions"].items() if not v["passed"]]
    _emit(args, {"report": report}, man, "passed" if not failed else "failed: " + ", ".join(failed))
    if failed:
        sys.stderr.write("validation failed: " + ", ".join(failed) + "\n")
    return EXIT_OK if report["passed"] else EXIT_INVALID


# ---------------------------------------------------------------- dynamics


def _cmd_dynamics(args) -> int:
    from .dynamics import FixedPointCode, load_system_spec, simulate_pipeline

    spec, code = load_system_spec(args.spec)
    if args.R is not None or args.D is not None:
        code = FixedPointCode(args.D if args.D is not None else code.D, args.R if args.R is not None else code.R)
    man = RunManifest("dynamics", _params(args))
    man.add_input(args.spec)
    opts = {"objective": args.objective, "substeps": args.substeps, "truncate": args.truncate,
            "workers": args.workers}
    traj = simulate_pipeline(spec, code, args.solver, opts)
    text = "\n".join(f"{t:g}: {row}" for t, row in zip(traj.times, traj.normalized.tolist()))
    _emit(args, traj.to_dict(), man, text)
    return EXIT_OK


# ---------------------------------------------------------------- embed / topology


def _graph(args):
    from .topology import generate_topology, load_working_graph

    if args.graph:
        return load_working_graph(args.graph)
    kind, _, n = args.topology.partition(":")
    return generate_topology(kind, int(n))


def _cmd_embed(args) -> int:
    from .model import read_instance, write_instance
    from .topology import (
        apply_embedding,
        chain_strength_from_scale,
        load_embedding,
        resolve_chains,
        validate_embedding,
    )

    emb = load_embedding(args.embedding)
    man = RunManifest(f"embed {args.action}", _params(args), seed=getattr(args, "seed", None))
    man.add_input(args.embedding)
    if args.action == "resolve":
        samples = np.loadtxt(args.samples, dtype=np.int64, ndmin=2)
        man.add_input(args.samples)
        try:
            logical, kept = resolve_chains(samples, emb, args.strategy, args.seed)
        except ValueError as exc:
            raise _UsageError(str(exc)) from exc
        payload = {"strategy": args.strategy, "kept": kept.tolist(), "samples": logical.tolist()}
        _emit(args, payload, man, "\n".join(" ".join(f"{v:+d}" for v in row) for row in logical))
        return EXIT_OK
    inst = read_instance(args.instance, kind="ising")
    man.add_input(args.instance)
    wg = _graph(args)
    if args.action == "validate":
        report = validate_embedding(emb, wg, inst)
        _emit(args, {"report": report}, man, "passed" if report["passed"] else "failed")
        return EXIT_OK if report["passed"] else EXIT_INVALID
    if (args.alpha is None) == (args.css is None):
        raise _UsageError("give exactly one of --alpha and --css")
    alpha = args.alpha if args.alpha is not None else chain_strength_from_scale(inst, args.css)
    emb_inst = apply_embedding(inst, emb, alpha, wg)
    payload = {"alpha": alpha, "qubits": list(emb_inst.qubits), "chain_links": emb_inst.chain_links,
               "instance": write_instance(emb_inst.instance)}
    _emit(args, payload, man, payload["instance"])
    return EXIT_OK


def _cmd_topology(args) -> int:
    from .topology import NODE_COUNT, TABLE_NODE_COUNT, dump_working_graph, generate_topology

    wg = generate_topology(args.kind, args.n)
    man = RunManifest("topology", _params(args))
    if args.edges_out:
        if not wg.complete:
            raise _UsageError(f"{args.kind} couplers are not generated; only node counts are available")
        dump_working_graph(wg, args.edges_out)
    payload = {"kind": args.kind, "n": args.n, "nodes": len(wg.nodes),
               "edges": len(wg.edges) if wg.complete else None,
               "formula_nodes": NODE_COUNT[args.kind](args.n),
               "table_nodes": TABLE_NODE_COUNT.get((args.kind, args.n))}
    _emit(args, payload, man, f"{payload['nodes']} nodes, {payload['edges']} edges")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _common(p, workers=True):
    p.add_argument("--output", "-o", help="write the result here instead of stdout")
    p.add_argument("--format", choices=("json", "text"), default="json")
    if workers:
        p.add_argument("--workers", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = _ArgParser(prog="spinglass", description="Spin-glass solvers and QUBO encoders.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_ArgParser)

    s = sub.add_parser("solve", help="solve an instance file")
    s.add_argument("instance")
    s.add_argument("--kind", choices=("ising", "qubo"), default="ising")
    s.add_argument("--solver", required=True, choices=("naive", "chunked", "gray", "sa", "pt", "tn", "mps"))
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--chunk-exp", type=int, default=None)
    s.add_argument("--cache-depth", type=int, default=None)
    s.add_argument("--fix", type=int, default=0)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--beta", type=float, nargs="+", default=None)
    s.add_argument("--beta-min", type=float, default=None)
    s.add_argument("--beta-max", type=float, default=None)
    s.add_argument("--sweeps", type=int, default=1000)
    s.add_argument("--restarts", type=int, default=100)
    s.add_argument("--replicas", type=int, default=16)
    s.add_argument("--chi", type=int, default=16)
    s.add_argument("--cutoff", type=float, default=1e-3)
    s.add_argument("--max-branches", type=int, default=1024)
    s.add_argument("--bond", type=int, default=16)
    s.add_argument("--dbeta", type=float, default=0.25)
    s.add_argument("--lattice", default=None, help="RxC grid of equal consecutive clusters")
    s.add_argument("--clusters", default=None, help="cluster map file")
    _common(s)
    s.set_defaults(func=_cmd_solve)

    c = sub.add_parser("convert", help="convert between Ising and QUBO")
    c.add_argument("instance")
    c.add_argument("--kind", choices=("ising", "qubo"), default="ising")
    c.add_argument("--to", choices=("ising", "qubo"), required=True)
    c.add_argument("--output", "-o")
    c.set_defaults(func=_cmd_convert)

    r = sub.add_parser("railway", help="compile, solve or validate dispatching problems")
    rs = r.add_subparsers(dest="action", required=True, parser_class=_ArgParser)
    for name in ("compile", "solve", "validate"):
        p = rs.add_parser(name)
        p.add_argument("problem")
        p.add_argument("--dmax", type=int, default=None)
        p.add_argument("--p-pair", type=float, default=None)
        p.add_argument("--p-sum", type=float, default=None)
        _common(p)
        p.set_defaults(func=_cmd_railway)
    rs.choices["compile"].add_argument("--qubo-out", default=None)
    rs.choices["solve"].add_argument("--oracle", choices=("onehot", "bnb", "chunked"), default="onehot")
    rs.choices["validate"].add_argument("delays", help="JSON delay table")

    d = sub.add_parser("dynamics", help="simulate a linear system through a QUBO")
    d.add_argument("spec")
    d.add_argument("--objective", choices=("lsq", "energy"), default="lsq")
    d.add_argument("--truncate", type=int, default=None)
    d.add_argument("--substeps", type=int, default=1)
    d.add_argument("--solver", choices=("gray", "chunked"), default="gray")
    d.add_argument("--R", type=int, default=None)
    d.add_argument("--D", type=int, default=None)
    _common(d)
    d.set_defaults(func=_cmd_dynamics)

    e = sub.add_parser("embed", help="apply, validate or resolve minor embeddings")
    es = e.add_subparsers(dest="action", required=True, parser_class=_ArgParser)
    for name in ("apply", "validate"):
        p = es.add_parser(name)
        p.add_argument("instance")
        p.add_argument("--embedding", required=True)
        g = p.add_mutually_exclusive_group(required=True)
        g.add_argument("--graph", help="edge-list file")
        g.add_argument("--topology", help="KIND:N, e.g. chimera:1")
        _common(p, workers=False)
        p.set_defaults(func=_cmd_embed)
    es.choices["apply"].add_argument("--alpha", type=float, default=None)
    es.choices["apply"].add_argument("--css", type=float, default=None)
    p = es.add_parser("resolve")
    p.add_argument("samples", help="whitespace table of +-1 spins, one sample per line")
    p.add_argument("--embedding", required=True)
    p.add_argument("--strategy", choices=("discard", "majority"), default="majority")
    p.add_argument("--seed", type=int, default=None)
    _common(p, workers=False)
    p.set_defaults(func=_cmd_embed)

    t = sub.add_parser("topology", help="generate a hardware graph")
    t.add_argument("kind", choices=("chimera", "pegasus", "zephyr"))
    t.add_argument("n", type=int)
    t.add_argument("--edges-out", default=None)
    _common(t, workers=False)
    t.set_defaults(func=_cmd_topology)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        args._t0 = time.perf_counter()
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except _UsageError as exc:
        sys.stderr.write(f"spinglass: error: {exc}\n")
        return EXIT_USAGE
    except (InstanceFormatError, OSError) as exc:
        sys.stderr.write(f"spinglass: input error: {exc}\n")
        return EXIT_USAGE
    except SizingError as exc:
        sys.stderr.write(f"spinglass: sizing refused: {exc}\n")
        return EXIT_SIZING
    except Exception as exc:  # noqa: BLE001
        sys.stderr.write(f"spinglass: solver error: {type(exc).__name__}: {exc}\n")
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
