"""Command line entry point: ``eventwalk <command> ...``.

Every command prints a JSON report on stdout and a one-line summary on
stderr. Exit codes: 0 all checks passed, 1 a check failed, 2 bad input
(usage or file format), 3 an instance exceeds the sizing caps.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import bench
from .decision import (
    SeparatorCertificate,
    decide_membership,
    extract_certifying_walk,
    extract_separator,
    verify_certifying_walk,
    verify_separator,
)
from .decorated import ModeViolation, SizingError, build, oracle_membership, sink_summary
from .event_graph import (
    EventGraph,
    GraphFormatError,
    format_set,
    gen_exponential_cycle,
    gen_hamiltonian_reduction,
    gen_lower_bound_path,
    parse_set,
    random_cycle_graph,
    random_strict_graph,
    read_graph,
    write_graph,
)

REPORT_SCHEMA = 1
EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_SIZE = 0, 1, 2, 3


class InputError(ValueError):
    pass


def _report(args, result: dict, ok: bool, summary: str) -> int:
    out = {
        "schema": REPORT_SCHEMA,
        "command": args.argv,
        "seed": getattr(args, "seed", None),
        "ok": ok,
        "result": result,
    }
    text = json.dumps(out, indent=2, sort_keys=True, default=_json_default)
    if getattr(args, "out", None):
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    print(summary, file=sys.stderr)
    return EXIT_OK if ok else EXIT_CHECK


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(f"not serializable: {type(o)}")


def _load(path: str) -> EventGraph:
    try:
        return read_graph(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _node(graph: EventGraph, spec: str) -> int:
    try:
        v = int(spec)
    except ValueError:
        raise InputError(f"node must be an integer id, got {spec!r}") from None
    if not 0 <= v < graph.n:
        raise InputError(f"node {v} out of range 0..{graph.n - 1}")
    return v


# ---------------------------------------------------------------- commands


def cmd_decide(args) -> int:
    g = _load(args.graph)
    v = _node(g, args.v)
    try:
        x = parse_set(g, args.set)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    run = decide_membership(g, v, x)
    ok = True
    res: dict = {"v": v, "set": format_set(g, x), "verdict": run.verdict, "ops": run.ops}
    if args.certify:
        if run.member:
            walk = extract_certifying_walk(run)
            good = verify_certifying_walk(g, v, x, walk)
            res["certificate"] = {"type": "walk", "walk": walk, "length": len(walk), "verified": good}
        else:
            cert = extract_separator(run)
            if isinstance(cert, SeparatorCertificate):
                good = verify_separator(g, v, x, cert)
                res["certificate"] = {"type": "separator", "nodes": sorted(cert.a), "verified": good}
            else:
                good = True
                res["certificate"] = {"type": "wrong-color", "node": cert.v, "verified": True}
        ok = ok and good
    if args.oracle_check:
        want = oracle_membership(g, v, x)
        res["oracle"] = "member" if want else "non-member"
        ok = ok and want == run.member
    return _report(args, res, ok, f"({v}, {res['set']}): {run.verdict}")


def cmd_sink(args) -> int:
    g = _load(args.graph)
    d = build(g)
    summ = sink_summary(d)
    counts = {str(v): summ.count_at(v) for v in range(g.n)}
    res = {
        "vertices": d.n_vertices,
        "edges": d.n_edges,
        "sink_components": int(d.is_sink.sum()),
        "sink_vertices": summ.vertex_count,
        "sink_diameter": summ.diameter,
        "nodes_represented": sum(1 for v in range(g.n) if summ.count_at(v) > 0),
        "sets_per_node": counts,
    }
    if args.summary:
        res["distinct_sets"] = summ.distinct_sets()
    if args.enumerate:
        res["sets"] = {str(v): [format_set(g, x) for x in xs] for v, xs in sorted(summ.sets_by_node.items())}
    ok = res["sink_components"] == 1
    return _report(args, res, ok, f"{res['sink_components']} sink component(s), {summ.vertex_count} vertices")


def _directions(args, n: int):
    from .cycle import adversary_directions

    if args.directions:
        text = args.directions
        if text.startswith("@"):
            text = Path(text[1:]).read_text()
        text = "".join(text.split())
        if not text or set(text) - set("+-"):
            raise InputError("direction strings use '+' (clockwise) and '-' only")
        return np.array([1 if c == "+" else 0 for c in text], np.int8), "directions"
    if args.strategy:
        return adversary_directions(args.strategy, n, args.steps, args.seed), args.strategy
    if args.mode == "adversarial":
        raise InputError("adversarial mode needs --directions or --strategy")
    return None, "random"


def write_trace(path: str, engine, dirs: np.ndarray, answers: np.ndarray, header: str) -> None:
    from .cycle import walk_nodes

    nodes = walk_nodes(engine.n, dirs)
    with open(path, "w") as fh:
        fh.write(f"# {header}\n")
        fh.write("# step node answer\n")
        for t, (v, a) in enumerate(zip(nodes, answers)):
            if math.isnan(a):
                txt = "-"
            elif math.isinf(a):
                txt = "inf"
            else:
                txt = repr(float(a))
            fh.write(f"{t} {int(v)} {txt}\n")


def cmd_walk(args) -> int:
    from .cycle import CycleEngine, EngineConfigError, random_directions, run_trace

    g = _load(args.graph)
    try:
        eng = CycleEngine(
            g, args.mode, s=args.s, epsilon=args.epsilon, bg_budget=args.bg_budget,
            seed=args.seed, audit=args.audit_links,
        )
    except EngineConfigError as exc:
        raise InputError(str(exc)) from None
    dirs, label = _directions(args, g.n)
    if dirs is None:
        dirs = random_directions(args.steps, args.seed)
    rep = run_trace(eng, dirs, seed=args.seed, oracle=not args.no_oracle, label=label, keep_answers=bool(args.trace_out))
    if args.trace_out:
        head = f"n={g.n} mode={args.mode} " + (f"seed={args.seed}" if label == "random" else f"trace={label}")
        write_trace(args.trace_out, eng, dirs, rep.answers, head)
    res = rep.to_dict()
    m = rep.metrics
    return _report(
        args, res, rep.ok,
        f"{rep.steps} steps, {rep.queries} queries, oracle mismatches {rep.oracle_mismatches}, "
        f"max range queries {m['range_queries_max']}, not-ready (steady) {m['not_ready_steady']}",
    )


def cmd_bench(args) -> int:
    try:
        rows = bench.run_suites(args.suites, seed=args.seed, steps=args.steps)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    text = bench.to_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text, end="")
    print(f"{len(rows)} rows", file=sys.stderr)
    return EXIT_OK


def _edge_list(spec: str) -> list[tuple[int, int]]:
    out = []
    for tok in spec.replace(" ", "").split(","):
        if not tok:
            continue
        a, sep, b = tok.partition("-")
        if not sep:
            raise InputError(f"edges look like 0-1,1-2; got {tok!r}")
        out.append((int(a), int(b)))
    return out


def cmd_gen(args) -> int:
    rng = np.random.default_rng(args.seed)
    extra: dict = {}
    if args.kind == "lower-bound":
        g, v = gen_lower_bound_path(args.m)
        extra = {"query_node": v}
    elif args.kind == "exp-cycle":
        g = gen_exponential_cycle(args.n)
    elif args.kind == "hamiltonian":
        inst = gen_hamiltonian_reduction(args.n, _edge_list(args.edges or ""))
        g = inst.graph
        extra = {"query_node": inst.query_node, "k": inst.k, "target": format_set(g, inst.target)}
    elif args.kind == "random-cycle":
        g = random_cycle_graph(rng, args.n)
    else:
        g = random_strict_graph(rng, args.n, args.m)
    write_graph(g, args.output)
    res = {"kind": args.kind, "path": args.output, "nodes": g.n, "elements": g.m, **extra}
    return _report(argparse.Namespace(argv=args.argv, seed=args.seed, out=None), res, True, f"wrote {args.output}")


# ---------------------------------------------------------------- parser


def make_parser() -> argparse.ArgumentParser:
    from .cycle import ADVERSARIES

    p = argparse.ArgumentParser(prog="eventwalk", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True)

    d = sub.add_parser("decide", help="sink membership of (v, X) with certificates")
    d.add_argument("graph")
    d.add_argument("v")
    d.add_argument("set", help="comma-separated element names or a 0x bitset")
    d.add_argument("--certify", action="store_true")
    d.add_argument("--oracle-check", action="store_true")
    d.add_argument("--out")
    d.set_defaults(func=cmd_decide)

    s = sub.add_parser("sink", help="explicit decorated graph and its sink")
    s.add_argument("graph")
    s.add_argument("--enumerate", action="store_true")
    s.add_argument("--summary", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sink)

    w = sub.add_parser("walk", help="successor searching along a walk on a cycle")
    w.add_argument("graph")
    w.add_argument("--mode", choices=("adversarial", "random"), default="random")
    w.add_argument("--s", type=int)
    w.add_argument("--epsilon", type=float)
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--steps", type=int, default=10_000)
    w.add_argument("--bg-budget", type=int)
    w.add_argument("--audit-links", choices=("off", "sampled", "full"), default="off")
    w.add_argument("--directions", help="string of + and -, or @file")
    w.add_argument("--strategy", choices=ADVERSARIES)
    w.add_argument("--no-oracle", action="store_true")
    w.add_argument("--trace-out")
    w.add_argument("--out")
    w.set_defaults(func=cmd_walk)

    b = sub.add_parser("bench", help="benchmarks as CSV (suite,case,metric,value)")
    b.add_argument("suites", help="comma-separated: " + ",".join(bench.SUITES))
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--steps", type=int, default=200_000)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)

    gp = sub.add_parser("gen", help="write a generated graph file")
    gp.add_argument("kind", choices=("lower-bound", "exp-cycle", "hamiltonian", "random-cycle", "random-strict"))
    gp.add_argument("-o", "--output", required=True)
    gp.add_argument("--m", type=int, default=4)
    gp.add_argument("--n", type=int, default=8)
    gp.add_argument("--edges", help="input graph edges for hamiltonian, e.g. 0-1,1-2")
    gp.add_argument("--seed", type=int, default=0)
    gp.set_defaults(func=cmd_gen)
    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.argv = ["eventwalk", *argv]
    try:
        return args.func(args)
    except (GraphFormatError, InputError, ModeViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SizingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SIZE


if __name__ == "__main__":
    sys.exit(main())
