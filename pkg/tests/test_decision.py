import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eventwalk.bounds import DECISION_C1, WALK_C2
from eventwalk.decision import (
    SeparatorCertificate,
    WronglyColored,
    decide_membership,
    extract_certifying_walk,
    extract_separator,
    verify_certifying_walk,
    verify_separator,
)
from eventwalk.decorated import ModeViolation, oracle_membership
from eventwalk.event_graph import (
    EventGraph,
    gen_lower_bound_path,
    lower_bound_target,
    random_strict_graph,
    set_of,
)


def test_fringe_state_after_two_nodes(fringe8):
    run = decide_membership(fringe8, 0, set_of([2, 3]), trace=True)
    # after processing v (node 0) and i4 (node 1)
    w, b, red = run.snapshots[1]
    assert w == 1
    assert [fringe8.label_name(u) for u in b] == ["d1", "d2"]
    assert {fringe8.universe[e]: [fringe8.label_name(u) for u in q] for e, q in red.items()} == {"2": ["i2"]}
    assert [e for e, _ in run.discoveries[:2]] == [2, 3]


def test_fringe8_verdict_matches_oracle(fringe8):
    for x in range(16):
        for v in range(fringe8.n):
            assert decide_membership(fringe8, v, x).member == oracle_membership(fringe8, v, x)


def test_lower_bound_member_walk():
    g, v = gen_lower_bound_path(2)
    run = decide_membership(g, v, set_of([0]))
    assert run.member
    walk = extract_certifying_walk(run)
    assert verify_certifying_walk(g, v, set_of([0]), walk)
    seq = [g.label_name(w) for w in walk]
    last = {}
    for name in seq:
        last[name[1:]] = name[0]
    assert last == {"1": "i", "2": "d"}


def test_red_query_node_short_circuits(small4):
    run = decide_membership(small4, 3, set_of([1]))
    assert not run.member and not run.v_blue and run.order == []
    assert extract_separator(run) == WronglyColored(3)


def test_palindrome_walk_certifies_empty_set(small4):
    walk = [3, 1, 2, 1, 3]
    assert verify_certifying_walk(small4, 3, 0, walk)
    assert not verify_certifying_walk(small4, 3, set_of([1]), walk)
    assert not verify_certifying_walk(small4, 3, 0, walk[:-1])


def test_member_run_has_no_separator():
    g, v = gen_lower_bound_path(2)
    run = decide_membership(g, v, set_of([0]))
    with pytest.raises(ValueError):
        extract_separator(run)


def test_non_member_run_has_no_walk(fringe8):
    x = set_of([1, 2])  # v=i3 is blue, i4 is red and never unlocked
    run = decide_membership(fringe8, 0, x)
    assert not run.member and run.v_blue
    with pytest.raises(ValueError):
        extract_certifying_walk(run)
    cert = extract_separator(run)
    assert cert == SeparatorCertificate(frozenset({1}))
    assert verify_separator(fringe8, 0, x, cert)


def test_separator_trivial_rejections():
    g, v = gen_lower_bound_path(3)
    assert not verify_separator(g, v, 0, SeparatorCertificate(frozenset()))
    assert not verify_separator(g, v, 0, SeparatorCertificate(frozenset(range(g.n))))


def test_single_element_walk_short():
    g = EventGraph.build([("i", 0), ("d", 0), ("d", 0), ("i", 0)], [(0, 1), (1, 2), (2, 3)], 1)
    run = decide_membership(g, 0, 1)
    walk = extract_certifying_walk(run)
    assert walk == [0]


def test_input_checks(small4):
    with pytest.raises(ValueError):
        decide_membership(small4, 0, 1 << 5)
    with pytest.raises(ModeViolation):
        decide_membership(EventGraph.build([("i", 0)], [], 1), 0, 0)


def test_exhaustive_sample(corpus):
    for g in corpus[:60]:
        bound = DECISION_C1 * (g.n + len(g.edges))
        for v in range(g.n):
            for x in range(1 << g.m):
                run = decide_membership(g, v, x)
                assert run.member == oracle_membership(g, v, x)
                assert run.ops <= bound
                if run.member:
                    walk = extract_certifying_walk(run)
                    assert verify_certifying_walk(g, v, x, walk)
                    assert len(walk) <= WALK_C2 * g.n**2


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 2**32 - 1), st.data())
def test_certificates_always_verify(seed, data):
    rng = np.random.default_rng(seed)
    m = data.draw(st.integers(1, 4))
    n = data.draw(st.integers(2 * m, 12))
    g = random_strict_graph(rng, n, m)
    v = data.draw(st.integers(0, n - 1))
    x = data.draw(st.integers(0, g.full_set))
    run = decide_membership(g, v, x)
    if run.member:
        assert verify_certifying_walk(g, v, x, extract_certifying_walk(run))
    else:
        cert = extract_separator(run)
        if isinstance(cert, SeparatorCertificate):
            assert verify_separator(g, v, x, cert)


def test_lower_bound_walk_length():
    for m in range(2, 7):
        g, v = gen_lower_bound_path(m)
        run = decide_membership(g, v, lower_bound_target(m))
        walk = extract_certifying_walk(run)
        assert verify_certifying_walk(g, v, lower_bound_target(m), walk)
        assert len(walk) <= WALK_C2 * g.n**2
