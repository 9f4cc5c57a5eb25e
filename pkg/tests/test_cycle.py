import math
import os
import subprocess
import sys

import numpy as np
import pytest

from eventwalk.cycle import (
    ADVERSARIES,
    CycleEngine,
    EngineConfigError,
    NaiveEngine,
    adversary_directions,
    boundary_query_fixup,
    clamp_wraparound,
    naive_step,
    random_directions,
    run_trace,
    walk_nodes,
)
from eventwalk.event_graph import EventGraph, gen_exponential_cycle, random_cycle_graph
from eventwalk.strip import StripQuery, build, oracle_query


def cycle(labels, values):
    n = len(labels)
    return EventGraph.build(labels, [(k, (k + 1) % n) for k in range(n)], len(values), values=values)


def rand_graph(n, seed, **kw):
    return random_cycle_graph(np.random.default_rng(seed), n, **kw)


def test_epsilon_maps_to_s():
    g = rand_graph(9, 0)
    assert CycleEngine(g, "adversarial", epsilon=1 / 3).s == 3
    assert CycleEngine(g, "adversarial", epsilon=0.5).s == 2
    with pytest.raises(EngineConfigError):
        CycleEngine(g, "adversarial", s=2, epsilon=1 / 3)


def test_random_mode_paths():
    eng = CycleEngine(rand_graph(16, 1), "random")
    assert (eng.n_paths, eng.path_len, eng.offsets) == (4, 4, (0, 2))
    assert eng.s == 3
    with pytest.raises(EngineConfigError):
        CycleEngine(rand_graph(16, 1), "random", s=2)


def test_config_errors():
    dup = cycle([("i", 0), ("q", 1), ("d", 0)], [1.0, 1.0])
    with pytest.raises(EngineConfigError):
        CycleEngine(dup)
    with pytest.raises(EngineConfigError):
        CycleEngine(rand_graph(3, 0), "random")
    two_inserts = cycle([("i", 0), ("i", 0), ("d", 0)], [1.0])
    with pytest.raises(EngineConfigError):
        CycleEngine(two_inserts)
    with pytest.raises(EngineConfigError):
        CycleEngine(rand_graph(40, 0), "random", bg_budget=3)


def test_empty_set_query_is_infinite():
    g = cycle([("q", 0), ("q", 1), ("i", 0), ("d", 0)], [1.0, 2.0])
    eng = CycleEngine(g)
    assert eng.initial_answer == math.inf
    assert eng.step("cw").answer == math.inf


def test_insert_query_delete():
    g = cycle([("i", 0), ("q", 1), ("d", 0)], [5.0, 3.0])
    for mode in ("adversarial",):
        eng = CycleEngine(g, mode)
        first = eng.step("cw")
        assert first.node == 1 and first.answer == 5.0
        second = eng.step("cw")
        assert second.node == 2 and second.answer is None
        assert eng.active_values() == []


def test_random_mode_small_cycle_answers():
    g = cycle([("i", 0), ("q", 1), ("d", 0), ("q", 1)], [5.0, 3.0])
    eng = CycleEngine(g, "random")
    assert eng.step("cw").answer == 5.0
    eng.step("cw")
    assert eng.step("cw").answer == math.inf


@pytest.mark.parametrize("mode", ["adversarial", "random"])
def test_matches_naive_engine(mode):
    g = rand_graph(37, 4)
    eng, ref = CycleEngine(g, mode, audit="full"), NaiveEngine(g)
    assert eng.initial_answer == ref.initial_answer
    rng = np.random.default_rng(9)
    for d in rng.integers(0, 2, 600):
        a, b = eng.step(int(d)), naive_step(ref, int(d))
        assert (a.node, a.answer) == (b.node, b.answer)
    assert eng.active_values() == ref.active_values()
    met = eng.metrics()
    assert met["audit_failures"] == 0
    # per track step; random mode may advance both tracks in one walk step
    assert met["range_queries_max"] <= 3


@pytest.mark.parametrize("strategy", ADVERSARIES)
@pytest.mark.parametrize("s", [1, 2, 3])
def test_adversarial_full_audit(strategy, s):
    for seed in range(3):
        g = rand_graph(20 + 11 * seed, seed)
        eng = CycleEngine(g, "adversarial", s=s, audit="full")
        rep = run_trace(eng, adversary_directions(strategy, g.n, 3000, seed))
        assert rep.oracle_mismatches == 0 and rep.ok
        assert rep.metrics["audits"] == 3000


@pytest.mark.parametrize("n", [4, 9, 16, 30, 64])
def test_random_full_audit(n):
    for seed in range(3):
        eng = CycleEngine(rand_graph(n, seed), "random", audit="full", seed=seed)
        rep = run_trace(eng, steps=4000)
        assert rep.ok and rep.oracle_mismatches == 0


def test_boundary_oscillation_random_mode():
    g = rand_graph(100, 2)
    eng = CycleEngine(g, "random", audit="full")
    # swing across the boundary between paths 0 and 1 of track 0
    dirs = adversary_directions("oscillate", g.n, 20_000, seed=1)
    rep = run_trace(eng, dirs)
    assert rep.ok and rep.oracle_mismatches == 0


def test_minimum_budget_stays_correct():
    g = rand_graph(400, 5)
    probe = CycleEngine(g, "random")
    floor = max(probe.max_step_ops, 1)
    eng = CycleEngine(g, "random", bg_budget=floor, audit="sampled")
    rep = run_trace(eng, steps=50_000, seed=3)
    assert rep.oracle_mismatches == 0
    assert rep.metrics["bg_ops_max"] <= floor
    assert rep.metrics["audit_failures"] == 0


def test_determinism():
    g = rand_graph(200, 8)
    a = run_trace(CycleEngine(g, "random", seed=4), steps=30_000)
    b = run_trace(CycleEngine(g, "random", seed=4), steps=30_000)
    assert a.to_dict() == b.to_dict()
    c = run_trace(CycleEngine(g, "random", seed=5), steps=30_000)
    assert c.answers_digest != a.answers_digest


def test_step_coin_is_seeded():
    g = rand_graph(50, 1)
    e1, e2 = CycleEngine(g, "random", seed=7), CycleEngine(g, "random", seed=7)
    assert [e1.step().node for _ in range(50)] == [e2.step().node for _ in range(50)]
    with pytest.raises(ValueError):
        CycleEngine(g).step()


def test_exponential_cycle_runs():
    g = gen_exponential_cycle(40)
    rep = run_trace(CycleEngine(g, "adversarial"), adversary_directions("restart", 40, 5000, 2))
    assert rep.ok


def test_trace_report_json():
    eng = CycleEngine(rand_graph(30, 3), "random")
    rep = run_trace(eng, steps=500, keep_answers=True)
    d = rep.to_dict()
    assert d["ok"] and d["steps"] == 500 and "answers" not in d
    assert rep.answers.shape == (501,)
    assert '"answers_digest"' in rep.to_json()


def test_walk_nodes():
    assert walk_nodes(5, np.array([1, 1, 0, 0, 0])).tolist() == [0, 1, 2, 1, 0, 4]


def test_adversary_shapes():
    d = adversary_directions("sweep", 10, 25)
    assert d[:10].tolist() == [1] * 10 and d[10:20].tolist() == [0] * 10
    with pytest.raises(ValueError):
        adversary_directions("zigzag", 10, 5)
    assert random_directions(10, 1).tolist() == random_directions(10, 1).tolist()


# ---------------------------------------------------------------- block helpers


def test_fixup_cases():
    vals = [4.0, 1.0, 7.0, 3.0]
    assert boundary_query_fixup(vals, 0, 7.0) == 2  # present: unchanged
    assert boundary_query_fixup(vals, 0, 5.5) == 2  # successor side
    assert boundary_query_fixup(vals, 0, 2.0) == 1  # predecessor side
    assert boundary_query_fixup(vals, 2, 0.5) == 4  # below everything: low sentinel
    assert boundary_query_fixup(vals, 0, 9.0) == 5  # high sentinel
    assert boundary_query_fixup([4.0, 1.0, 7.0], 2, 0.5) == 3


def test_fixup_preserves_middle_strip():
    rng = np.random.default_rng(11)
    for _ in range(200):
        ln = int(rng.integers(2, 12))
        vals = rng.permutation(40)[:ln].astype(float)
        aug = np.concatenate([vals, [-np.inf, np.inf]])
        i = int(rng.integers(ln))
        y_j = float(rng.integers(-2, 42)) + 0.5
        jp = boundary_query_fixup(vals, i, y_j)
        full = np.concatenate([aug, [y_j]])
        for d in ("right", "left"):
            want = oracle_query(full, StripQuery(i + 1, ln + 3, 2, d))
            got = oracle_query(aug, StripQuery(i + 1, jp + 1, 2, d))
            assert want == got


def test_clamp_cases():
    assert clamp_wraparound(1, 3, "right") is None
    assert clamp_wraparound(5, 3, "right") == 5
    assert clamp_wraparound(5, 3, "left") is None
    assert clamp_wraparound(1, 3, "left") == 1
    assert clamp_wraparound(None, 3) is None


def no_wrap(y, q):
    yi, yj = y[q.i - 1], y[q.j - 1]
    lo, hi = min(yi, yj), max(yi, yj)
    inside = {1: lambda v: v > hi, 2: lambda v: lo < v < hi, 3: lambda v: v < lo}[q.strip]
    ks = [k for k in range(1, len(y) + 1) if inside(y[k - 1])]
    if q.dir == "right":
        ks = [k for k in ks if k > q.i]
        return min(ks) if ks else None
    ks = [k for k in ks if k < q.i]
    return max(ks) if ks else None


def test_clamp_matches_no_wrap_oracle():
    rng = np.random.default_rng(12)
    for n in (3, 5, 8):
        y = rng.permutation(n).astype(float)
        st = build(y, 2)
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                if i == j:
                    continue
                for a in (1, 2, 3):
                    for d in ("right", "left"):
                        q = StripQuery(i, j, a, d)
                        assert clamp_wraparound(st.query(q), i, d) == no_wrap(y, q)


def test_fallback_matches_jit():
    code = (
        "import numpy as np;"
        "from eventwalk.cycle import CycleEngine, run_trace;"
        "from eventwalk.event_graph import random_cycle_graph;"
        "g = random_cycle_graph(np.random.default_rng(6), 60);"
        "print(run_trace(CycleEngine(g, 'random', seed=2), steps=3000).answers_digest)"
    )
    out = {}
    for flag in ("0", "1"):
        env = dict(os.environ, EVENTWALK_NO_JIT=flag)
        res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        out[flag] = res.stdout.strip()
    assert out["0"] == out["1"] and len(out["0"]) == 64
