"""Linear-time sink membership with certificates.

Nodes start blue when their label agrees with the target set (insert of a
member, delete of a non-member) and red otherwise. A breadth-first search from
``v`` grows the blue region; red nodes wait in per-element queues until some
node of their element is reached, at which point the whole element turns blue.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

from .decorated import require_strict
from .event_graph import ElementSet, EventGraph, Kind


@dataclass
class DecisionRun:
    graph: EventGraph
    v: int
    x: ElementSet
    member: bool
    v_blue: bool
    order: list[int] = field(default_factory=list)
    discoveries: list[tuple[int, int]] = field(default_factory=list)
    remaining_red: dict[int, list[int]] = field(default_factory=dict)
    parent: list[int] = field(default_factory=list)
    ops: int = 0
    snapshots: list[tuple[int, list[int], dict[int, list[int]]]] | None = None

    @property
    def verdict(self) -> str:
        return "member" if self.member else "non-member"


@dataclass(frozen=True)
class SeparatorCertificate:
    a: frozenset[int]


@dataclass(frozen=True)
class WronglyColored:
    """Non-membership witnessed by the query node's own label."""

    v: int


def initial_blue(graph: EventGraph, x: ElementSet, w: int) -> bool:
    lab = graph.labels[w]
    inside = (x >> lab.element) & 1 == 1
    return inside if lab.kind == Kind.INSERT else not inside


def decide_membership(graph: EventGraph, v: int, x: ElementSet, trace: bool = False) -> DecisionRun:
    require_strict(graph)
    if x >> graph.m:
        raise ValueError("set references elements outside the universe")
    if not 0 <= v < graph.n:
        raise ValueError(f"node {v} does not exist")
    n = graph.n
    labels = graph.labels
    blue = [initial_blue(graph, x, w) for w in range(n)]
    run = DecisionRun(graph, v, x, False, blue[v], parent=[-1] * n)
    run.ops = n
    if not blue[v]:
        return run

    by_elem: list[list[int]] = [[] for _ in range(graph.m)]
    for w in range(n):
        by_elem[labels[w].element].append(w)
    seen_elem = [False] * graph.m
    queued = [False] * n  # ever placed in B
    in_red = [False] * n
    red: dict[int, deque[int]] = {}
    b = deque([v])
    queued[v] = True
    ops = n
    snaps: list | None = [] if trace else None

    while b:
        w = b.popleft()
        ops += 1
        run.order.append(w)
        e = labels[w].element
        if not seen_elem[e]:
            seen_elem[e] = True
            run.discoveries.append((e, w))
            for u in by_elem[e]:
                blue[u] = True
                ops += 1
            pending = red.pop(e, None)
            if pending:
                for u in pending:
                    ops += 1
                    if not queued[u]:
                        queued[u] = True
                        b.append(u)
        for u in graph.adjacency[w]:
            ops += 1
            if queued[u]:
                continue
            if blue[u]:
                queued[u] = True
                run.parent[u] = w
                b.append(u)
            elif not in_red[u]:
                in_red[u] = True
                run.parent[u] = w
                red.setdefault(labels[u].element, deque()).append(u)
        if snaps is not None:
            snaps.append((w, list(b), {k: list(q) for k, q in red.items() if q}))

    run.remaining_red = {k: list(q) for k, q in sorted(red.items()) if q}
    run.member = not run.remaining_red
    run.ops = ops
    run.snapshots = snaps
    return run


def _tree_path(parent: Sequence[int], depth: Sequence[int], a: int, b: int) -> list[int]:
    """Nodes on the forest path from ``a`` to ``b`` (both included)."""
    up_a, up_b = [a], [b]
    while up_a[-1] != up_b[-1]:
        if depth[up_a[-1]] >= depth[up_b[-1]]:
            up_a.append(parent[up_a[-1]])
        else:
            up_b.append(parent[up_b[-1]])
    return up_a + up_b[-2::-1]


def extract_certifying_walk(run: DecisionRun) -> list[int]:
    """Closed walk at ``v`` whose last references match the target set.

    The discovery nodes are chained through the search tree in discovery
    order starting from ``v``, closed back at ``v`` and read backwards.
    """
    if not run.member:
        raise ValueError("run is not a member run")
    parent = run.parent
    depth = [0] * run.graph.n
    for w in run.order:
        if w != run.v:
            depth[w] = depth[parent[w]] + 1
    stops = [run.v] + [w for _, w in run.discoveries[1:]] + [run.v]
    rev = [run.v]
    for a, b in zip(stops, stops[1:]):
        rev.extend(_tree_path(parent, depth, a, b)[1:])
    rev.reverse()
    return rev


def extract_separator(run: DecisionRun) -> SeparatorCertificate | WronglyColored:
    if run.member:
        raise ValueError("member runs have no separator")
    if not run.v_blue:
        return WronglyColored(run.v)
    a = frozenset(w for q in run.remaining_red.values() for w in q)
    cert = SeparatorCertificate(a)
    if not verify_separator(run.graph, run.v, run.x, cert):
        raise RuntimeError("extracted separator failed verification")
    return cert


def verify_certifying_walk(graph: EventGraph, v: int, x: ElementSet, walk: Sequence[int]) -> bool:
    if not walk or walk[0] != v or walk[-1] != v:
        return False
    for a, b in zip(walk, walk[1:]):
        if not graph.is_adjacent(a, b):
            return False
    last: dict[int, Kind] = {}
    for w in walk:
        if not 0 <= w < graph.n:
            return False
        lab = graph.labels[w]
        if lab.kind != Kind.QUERY:
            last[lab.element] = lab.kind
    if len(last) != graph.m:
        return False
    return all((kind == Kind.INSERT) == ((x >> e) & 1 == 1) for e, kind in last.items())


def verify_separator(graph: EventGraph, v: int, x: ElementSet, cert: SeparatorCertificate) -> bool:
    a = cert.a
    if v in a or not a:
        return False
    alive = [w not in a for w in range(graph.n)]
    comp = [-1] * graph.n
    ncomp = 0
    for s in range(graph.n):
        if not alive[s] or comp[s] >= 0:
            continue
        comp[s] = ncomp
        todo = [s]
        while todo:
            u = todo.pop()
            for w in graph.adjacency[u]:
                if alive[w] and comp[w] < 0:
                    comp[w] = ncomp
                    todo.append(w)
        ncomp += 1
    if ncomp < 2:
        return False
    elems_b = {graph.labels[w].element for w in range(graph.n) if comp[w] == comp[v]}
    kinds: dict[int, set[Kind]] = {}
    for w in a:
        lab = graph.labels[w]
        if lab.element in elems_b:
            return False
        kinds.setdefault(lab.element, set()).add(lab.kind)
    for e, ks in kinds.items():
        if len(ks) != 1:
            return False
        (k,) = ks
        inside = (x >> e) & 1 == 1
        if k == Kind.INSERT and inside:
            return False
        if k == Kind.DELETE and not inside:
            return False
    return True
