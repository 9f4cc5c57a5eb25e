import numpy as np
import pytest

from eventwalk.event_graph import EventGraph, random_strict_graph

# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])


def strict_corpus(count=200, seed=2024):
    """Seeded random strict graphs with n <= 10 and at most 5 elements."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(2, 11))
        m = int(rng.integers(1, min(5, n // 2) + 1))
        out.append(random_strict_graph(rng, n, m))
    return out


@pytest.fixture(scope="session")
def corpus():
    return strict_corpus()


@pytest.fixture
def small4():
    # nodes: 0=i1 1=i2 2=d1 3=d2
    return EventGraph.build(
        [("i", 0), ("i", 1), ("d", 0), ("d", 1)],
        [(0, 1), (0, 2), (1, 2), (1, 3)],
        2,
    )


@pytest.fixture
def fringe8():
    # 0=i3 (query node) 1=i4 2=i2 3=d1 4=d2 5=i1 6=d3 7=d4
    labels = [("i", 2), ("i", 3), ("i", 1), ("d", 0), ("d", 1), ("i", 0), ("d", 2), ("d", 3)]
    edges = [(0, 1), (0, 2), (1, 3), (1, 4), (4, 5), (3, 6), (3, 7)]
    return EventGraph.build(labels, edges, 4)
