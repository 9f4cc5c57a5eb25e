"""Acceptance suite: one PASS/FAIL line per criterion.

The lines are printed as the tests run (visible with ``-s``) and repeated in
the terminal summary. Constants come from ``eventwalk.bounds``.
"""

import time

import networkx as nx
import numpy as np
import pytest

from conftest import ACCEPTANCE, strict_corpus
from eventwalk.bounds import (
    DECISION_C1,
    LOWER_BOUND_WALKS,
    WALK_C2,
    lookup_bound,
    storage_bound,
)
from eventwalk.cycle import ADVERSARIES, CycleEngine, adversary_directions, run_trace
from eventwalk.decision import (
    SeparatorCertificate,
    decide_membership,
    extract_certifying_walk,
    extract_separator,
    verify_certifying_walk,
    verify_separator,
)
from eventwalk.decorated import (
    build,
    full_build,
    oracle_membership,
    reaches_component,
    shortest_certifying_walk,
    sink_components,
    sink_summary,
)
from eventwalk.event_graph import (
    gen_exponential_cycle,
    gen_hamiltonian_reduction,
    gen_lower_bound_path,
    has_hamiltonian_path,
    lower_bound_target,
    random_cycle_graph,
)
from eventwalk.strip import build as build_strip
from eventwalk.strip import oracle_all


def record(k, title, ok, detail):
    line = f"[{k}] {title}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE[k] = line
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def graphs():
    return strict_corpus()


def test_1_sink_uniqueness(graphs):
    t0 = time.perf_counter()
    bad = []
    for idx, g in enumerate(graphs):
        d = full_build(g)
        sinks = sink_components(d)
        if len(sinks) != 1:
            bad.append((idx, "sinks", len(sinks)))
            continue
        reach = reaches_component(d, sinks[0])
        if not all(reach[d.index_of(v, 0)] for v in range(g.n)):
            bad.append((idx, "unreached"))
        summ = sink_summary(d, diameter_limit=0)
        if any(summ.count_at(v) == 0 for v in range(g.n)):
            bad.append((idx, "unrepresented"))
    dt = time.perf_counter() - t0
    ok = not bad and dt < 60
    record(1, "sink uniqueness and representation", ok, f"{len(graphs)} graphs, {len(bad)} bad, {dt:.1f} s")


def test_2_decision_equivalence(graphs):
    pairs = disagree = bad_cert = 0
    worst_walk = worst_ops = 0.0
    for g in graphs:
        for v in range(g.n):
            for x in range(1 << g.m):
                pairs += 1
                run = decide_membership(g, v, x)
                if run.member != oracle_membership(g, v, x):
                    disagree += 1
                    continue
                worst_ops = max(worst_ops, run.ops / (g.n + len(g.edges)))
                if run.member:
                    walk = extract_certifying_walk(run)
                    worst_walk = max(worst_walk, len(walk) / g.n**2)
                    if not verify_certifying_walk(g, v, x, walk) or len(walk) > WALK_C2 * g.n**2:
                        bad_cert += 1
                else:
                    cert = extract_separator(run)
                    if isinstance(cert, SeparatorCertificate) and not verify_separator(g, v, x, cert):
                        bad_cert += 1
    ok = disagree == 0 and bad_cert == 0 and worst_ops <= DECISION_C1
    record(
        2, "decision equivalence", ok,
        f"{pairs} pairs, {disagree} disagreements, {bad_cert} bad certificates, "
        f"max walk/n^2 {worst_walk:.3f} <= {WALK_C2}, max ops/(V+E) {worst_ops:.2f} <= {DECISION_C1}",
    )


def test_3_quadratic_walks():
    lengths = {}
    for m in range(2, 7):
        g, v = gen_lower_bound_path(m)
        x = lower_bound_target(m)
        walk = shortest_certifying_walk(g, v, x)
        assert walk is not None and verify_certifying_walk(g, v, x, walk)
        lengths[m] = len(walk)
    ratios = [lengths[m] / m**2 for m in range(2, 7)]
    monotone = all(lengths[m] < lengths[m + 1] for m in range(2, 6))
    ok = lengths == LOWER_BOUND_WALKS and monotone and all(0.5 <= r <= 4.0 for r in ratios)
    record(
        3, "quadratic certifying walks", ok,
        "lengths " + ", ".join(f"m={m}:{lengths[m]}" for m in lengths)
        + "; len/m^2 " + ", ".join(f"{r:.2f}" for r in ratios),
    )


def test_4_exponential_sink():
    counts = {}
    either = {}
    t12 = 0.0
    for n in (8, 10, 12):
        t0 = time.perf_counter()
        summ = sink_summary(build(gen_exponential_cycle(n)), diameter_limit=0)
        counts[n] = summ.count_at(0)
        either[n] = summ.distinct_sets([0, n - 1])
        if n == 12:
            t12 = time.perf_counter() - t0
    ok = all(counts[n] >= 2 ** (n // 2) for n in counts) and t12 < 60
    record(
        4, "exponential sink", ok,
        ", ".join(f"n={n}: {c} sets at v1 (need {2 ** (n // 2)})" for n, c in counts.items())
        + "; at v1 or vn: " + ", ".join(f"{either[n]}" for n in either)
        + f", {t12:.2f} s at n=12",
    )


def connected_graphs(max_n=6):
    for h in nx.graph_atlas_g()[1:]:
        if h.number_of_nodes() <= max_n and nx.is_connected(h):
            yield h


def test_5_reduction_faithfulness():
    checked = wrong = 0
    for h in connected_graphs():
        n = h.number_of_nodes()
        edges = list(h.edges())
        inst = gen_hamiltonian_reduction(n, edges)
        walk = shortest_certifying_walk(inst.graph, inst.query_node, inst.target)
        short = walk is not None and len(walk) <= inst.k
        checked += 1
        if short != has_hamiltonian_path(n, edges):
            wrong += 1
    record(5, "reduction faithfulness", wrong == 0, f"{checked} connected graphs up to isomorphism, {wrong} wrong")


def test_6_strip_structure():
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    mism = over_look = over_store = 0
    worst_look = {1: 0, 2: 0, 3: 0}
    worst_store = 0.0
    for _ in range(100):
        n = int(rng.integers(4, 129))
        y = rng.permutation(3 * n)[:n].astype(float)
        orc = oracle_all(y)
        i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        keep = i != j
        i, j = i[keep], j[keep]
        qs = np.concatenate(
            [np.stack([i, j, np.full_like(i, a), np.full_like(i, r)], 1) for a in (1, 2, 3) for r in (0, 1)]
        )
        want = orc[qs[:, 0], qs[:, 1], qs[:, 2] - 1, qs[:, 3]]
        for s in (1, 2, 3):
            st = build_strip(y, s)
            got, looks = st.query_batch(qs)
            mism += int(np.count_nonzero(got != want))
            worst_look[s] = max(worst_look[s], int(looks.max()))
            over_look += int(np.count_nonzero(looks > lookup_bound(s)))
            cells = st.stats()["storage_cells"]
            worst_store = max(worst_store, cells / storage_bound(n, s))
            over_store += cells > storage_bound(n, s)
    dt = time.perf_counter() - t0
    ok = mism == 0 and over_look == 0 and over_store == 0 and dt < 300
    record(
        6, "strip structure", ok,
        f"{mism} mismatches, max lookups {worst_look} vs bound 5s, "
        f"max storage/bound {worst_store:.3f}, {dt:.1f} s",
    )


def test_7_adversarial_engine():
    g = random_cycle_graph(np.random.default_rng(7), 1000)
    mism = 0
    rq_max = 0
    rq_over = 0
    for k, strat in enumerate(ADVERSARIES):
        eng = CycleEngine(g, "adversarial", epsilon=1 / 3)
        rep = run_trace(eng, adversary_directions(strat, g.n, 100_000, seed=k), label=strat)
        mism += rep.oracle_mismatches
        rq_max = max(rq_max, rep.metrics["range_queries_max"])
        rq_over += rep.metrics["range_queries_hist"][3]
    audit_fail = 0
    audits = 0
    for n in (16, 32, 64):
        for k, strat in enumerate(ADVERSARIES):
            small = random_cycle_graph(np.random.default_rng(100 + n + k), n)
            eng = CycleEngine(small, "adversarial", audit="full")
            rep = run_trace(eng, adversary_directions(strat, n, 5_000, seed=k))
            audit_fail += rep.metrics["audit_failures"] + rep.oracle_mismatches
            audits += rep.metrics["audits"]
    ok = mism == 0 and audit_fail == 0 and rq_max <= 2
    record(
        7, "adversarial engine", ok,
        f"{mism} oracle mismatches over 3x1e5 steps, max range queries per step {rq_max} (limit 2, "
        f"{rq_over} steps above), {audits} full audits with {audit_fail} failures",
    )


@pytest.mark.slow
def test_8_random_engine():
    t0 = time.perf_counter()
    mism = over = steady_nr = warm_nr = 0
    fg = {}
    for n, seeds in ((10_000, range(10)), (1_000, range(3))):
        means = []
        for seed in seeds:
            g = random_cycle_graph(np.random.default_rng(seed), n)
            eng = CycleEngine(g, "random", seed=seed)
            rep = run_trace(eng, steps=1_000_000)
            m = rep.metrics
            mism += rep.oracle_mismatches
            over += m["bg_over_budget"]
            steady_nr += m["not_ready_steady"]
            warm_nr += m["not_ready_warmup"]
            means.append(m["fg_ops_mean"])
        fg[n] = float(np.mean(means))
    ratio = fg[10_000] / fg[1_000]
    dt = time.perf_counter() - t0
    ok = mism == 0 and over == 0 and steady_nr == 0 and ratio <= 1.5 and 1 / ratio <= 1.5 and dt < 600
    record(
        8, "random-walk engine", ok,
        f"{mism} mismatches over 10x1e6 steps, {over} steps over budget, not-ready steady {steady_nr} "
        f"(warm-up {warm_nr}), fg ops/step {fg[10_000]:.1f} vs {fg[1_000]:.1f} ratio {ratio:.3f}, {dt:.0f} s",
    )
