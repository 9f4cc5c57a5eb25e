"""Explicit decorated graphs for small instances, plus exhaustive oracles.

Vertices are (node, active set) pairs. In full scope vertex ``v * 2**m + X``
stands for ``(v, X)``; in reachable scope vertices are listed in sorted
(node, set) order and looked up through a dictionary.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from ._jit import kernel
from .event_graph import (
    ElementSet,
    EventGraph,
    Kind,
    apply_label,
    validate,
)

DEFAULT_UNIVERSE_CAP = 20
DEFAULT_EDGE_CAP = 10_000_000


class SizingError(RuntimeError):
    """The requested decorated graph is larger than the configured cap."""


class ModeViolation(ValueError):
    pass


def universe_cap() -> int:
    return int(os.environ.get("EVENTWALK_UNIVERSE_CAP", DEFAULT_UNIVERSE_CAP))


def edge_cap() -> int:
    return int(os.environ.get("EVENTWALK_EDGE_CAP", DEFAULT_EDGE_CAP))


def require_strict(graph: EventGraph) -> None:
    rep = validate(graph, "strict")
    if not rep.ok:
        raise ModeViolation(rep.violation)


# ---------------------------------------------------------------- kernels


@kernel
def tarjan_scc(indptr, indices):
    """Iterative Tarjan; returns (component id per vertex, component count).

    Components are numbered in the order Tarjan completes them (sinks first).
    """
    nv = indptr.shape[0] - 1
    index = np.full(nv, -1, np.int64)
    low = np.zeros(nv, np.int64)
    on_stack = np.zeros(nv, np.bool_)
    comp = np.full(nv, -1, np.int64)
    stack = np.empty(nv, np.int64)
    call_v = np.empty(nv, np.int64)
    call_e = np.empty(nv, np.int64)
    sp = 0
    depth = 0
    counter = 0
    ncomp = 0
    for root in range(nv):
        if index[root] >= 0:
            continue
        call_v[0] = root
        call_e[0] = indptr[root]
        depth = 1
        index[root] = counter
        low[root] = counter
        counter += 1
        stack[sp] = root
        sp += 1
        on_stack[root] = True
        while depth > 0:
            u = call_v[depth - 1]
            e = call_e[depth - 1]
            if e < indptr[u + 1]:
                call_e[depth - 1] = e + 1
                w = indices[e]
                if index[w] < 0:
                    index[w] = counter
                    low[w] = counter
                    counter += 1
                    stack[sp] = w
                    sp += 1
                    on_stack[w] = True
                    call_v[depth] = w
                    call_e[depth] = indptr[w]
                    depth += 1
                elif on_stack[w]:
                    if index[w] < low[u]:
                        low[u] = index[w]
                continue
            if low[u] == index[u]:
                while True:
                    sp -= 1
                    w = stack[sp]
                    on_stack[w] = False
                    comp[w] = ncomp
                    if w == u:
                        break
                ncomp += 1
            depth -= 1
            if depth > 0:
                p = call_v[depth - 1]
                if low[u] < low[p]:
                    low[p] = low[u]
    return comp, ncomp


@kernel
def walk_bfs(indptr, indices, kind, elem, target, v, m):
    """BFS over (node, constrained-set) states of a reversed certifying walk.

    Returns (parent array, goal state or -1). State id = node * 2**m + set.
    """
    n = indptr.shape[0] - 1
    size = n << m
    full = (1 << m) - 1
    parent = np.full(size, -2, np.int64)
    ev = elem[v]
    inside = (target >> ev) & 1
    if (kind[v] == 0) != (inside == 1):
        return parent, -1
    start = (v << m) | (1 << ev)
    parent[start] = -1
    if (1 << ev) == full:
        return parent, start
    queue = np.empty(size, np.int64)
    head = 0
    tail = 0
    queue[tail] = start
    tail += 1
    while head < tail:
        s = queue[head]
        head += 1
        u = s >> m
        c = s & full
        for k in range(indptr[u], indptr[u + 1]):
            w = indices[k]
            ew = elem[w]
            bit = 1 << ew
            if c & bit:
                nc = c
            else:
                if (kind[w] == 0) != (((target >> ew) & 1) == 1):
                    continue
                nc = c | bit
            t = (w << m) | nc
            if parent[t] != -2:
                continue
            parent[t] = s
            if w == v and nc == full:
                return parent, t
            queue[tail] = t
            tail += 1
    return parent, -1


# ---------------------------------------------------------------- structure


@dataclass
class DecoratedGraph:
    graph: EventGraph
    scope: str
    node: np.ndarray  # first coordinate per vertex
    aset: np.ndarray  # active set per vertex
    indptr: np.ndarray
    indices: np.ndarray
    comp: np.ndarray  # deterministic component id per vertex
    n_comp: int
    is_sink: np.ndarray  # per component
    _lookup: dict | None = None

    @property
    def n_vertices(self) -> int:
        return int(self.node.shape[0])

    @property
    def n_edges(self) -> int:
        return int(self.indices.shape[0])

    def index_of(self, v: int, x: ElementSet) -> int:
        if self.scope == "full":
            return (v << self.graph.m) | x
        assert self._lookup is not None
        return self._lookup[(v, x)]

    def vertex(self, k: int) -> tuple[int, ElementSet]:
        return int(self.node[k]), int(self.aset[k])

    def successors(self, k: int) -> np.ndarray:
        return self.indices[self.indptr[k] : self.indptr[k + 1]]


def _csr_arrays(graph: EventGraph) -> tuple[np.ndarray, np.ndarray]:
    indptr = np.zeros(graph.n + 1, np.int64)
    for v in range(graph.n):
        indptr[v + 1] = indptr[v] + len(graph.adjacency[v])
    indices = np.fromiter((w for v in range(graph.n) for w in graph.adjacency[v]), np.int64, int(indptr[-1]))
    return indptr, indices


def _label_arrays(graph: EventGraph) -> tuple[np.ndarray, np.ndarray]:
    kind = np.array([int(lab.kind) for lab in graph.labels], np.int64)
    elem = np.array([lab.element for lab in graph.labels], np.int64)
    return kind, elem


def _finish(graph, scope, node, aset, indptr, indices, lookup=None) -> DecoratedGraph:
    raw, ncomp = tarjan_scc(indptr, indices)
    nv = node.shape[0]
    first = np.full(ncomp, nv, np.int64)
    np.minimum.at(first, raw, np.arange(nv))
    order = np.argsort(first, kind="stable")
    rename = np.empty(ncomp, np.int64)
    rename[order] = np.arange(ncomp)
    comp = rename[raw]
    src = np.repeat(comp, np.diff(indptr))
    dst = comp[indices]
    leaving = np.zeros(ncomp, bool)
    leaving[src[src != dst]] = True
    return DecoratedGraph(graph, scope, node, aset, indptr, indices, comp, int(ncomp), ~leaving, lookup)


def _transition(graph: EventGraph, w: int, xs: np.ndarray) -> np.ndarray:
    lab = graph.labels[w]
    bit = np.int64(1) << np.int64(lab.element)
    if lab.kind == Kind.INSERT:
        return xs | bit
    if lab.kind == Kind.DELETE:
        return xs & ~bit
    return xs


def build(graph: EventGraph, seeds: Iterable[tuple[int, ElementSet]] | None = None) -> DecoratedGraph:
    """Build dec(G) over all n*2**m vertices, or only those reachable from ``seeds``."""
    m = graph.m
    if seeds is None:
        if m > universe_cap():
            raise SizingError(f"universe size {m} exceeds cap {universe_cap()}")
        state_edges = 2 * len(graph.edges) << m
        if state_edges > edge_cap():
            raise SizingError(f"{state_edges} state edges exceed cap {edge_cap()}")
        xs = np.arange(1 << m, dtype=np.int64)
        blocks = []
        deg = np.zeros(graph.n, np.int64)
        for v in range(graph.n):
            nb = graph.adjacency[v]
            deg[v] = len(nb)
            if nb:
                cols = [(np.int64(w) << m) | _transition(graph, w, xs) for w in nb]
                blocks.append(np.stack(cols, axis=1).ravel())
        indices = np.concatenate(blocks) if blocks else np.zeros(0, np.int64)
        indptr = np.zeros(graph.n * (1 << m) + 1, np.int64)
        np.cumsum(np.repeat(deg, 1 << m), out=indptr[1:])
        node = np.repeat(np.arange(graph.n, dtype=np.int64), 1 << m)
        aset = np.tile(xs, graph.n)
        return _finish(graph, "full", node, aset, indptr, indices)

    seen: set[tuple[int, int]] = set()
    todo = deque()
    for v, x in seeds:
        if (v, x) not in seen:
            seen.add((v, x))
            todo.append((v, x))
    while todo:
        v, x = todo.popleft()
        for w in graph.adjacency[v]:
            nxt = (w, apply_label(x, graph.labels[w]))
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
                if len(seen) > edge_cap():
                    raise SizingError("reachable decorated graph exceeds cap")
    verts = sorted(seen)
    lookup = {vx: k for k, vx in enumerate(verts)}
    node = np.array([v for v, _ in verts], np.int64)
    aset = np.array([x for _, x in verts], np.int64)
    indptr = np.zeros(len(verts) + 1, np.int64)
    out = []
    for k, (v, x) in enumerate(verts):
        nb = graph.adjacency[v]
        indptr[k + 1] = indptr[k] + len(nb)
        out.extend(lookup[(w, apply_label(x, graph.labels[w]))] for w in nb)
    indices = np.array(out, np.int64)
    return _finish(graph, "reachable", node, aset, indptr, indices, lookup)


@lru_cache(maxsize=64)
def full_build(graph: EventGraph) -> DecoratedGraph:
    return build(graph)


def sink_components(d: DecoratedGraph) -> list[int]:
    return [int(c) for c in np.flatnonzero(d.is_sink)]


def reaches_component(d: DecoratedGraph, c: int) -> np.ndarray:
    """Boolean mask of vertices that can reach component ``c``."""
    nv = d.n_vertices
    src = np.repeat(np.arange(nv, dtype=np.int64), np.diff(d.indptr))
    order = np.argsort(d.indices, kind="stable")
    rptr = np.zeros(nv + 1, np.int64)
    np.cumsum(np.bincount(d.indices, minlength=nv), out=rptr[1:])
    rsrc = src[order]
    mark = d.comp == c
    todo = list(np.flatnonzero(mark))
    while todo:
        w = todo.pop()
        for u in rsrc[rptr[w] : rptr[w + 1]]:
            if not mark[u]:
                mark[u] = True
                todo.append(u)
    return mark


def oracle_membership(graph: EventGraph, v: int, x: ElementSet) -> bool:
    """True iff (v, x) lies in the unique sink of the full decorated graph."""
    require_strict(graph)
    if x >> graph.m:
        raise ValueError("set references elements outside the universe")
    d = full_build(graph)
    sinks = sink_components(d)
    if len(sinks) != 1:
        raise RuntimeError(f"expected one sink component, found {len(sinks)}")
    return int(d.comp[d.index_of(v, x)]) == sinks[0]


def shortest_certifying_walk(graph: EventGraph, v: int, x: ElementSet) -> list[int] | None:
    """Minimum-length closed walk at ``v`` certifying ``x``, or ``None``.

    Length is measured in nodes. Ties go to lower node ids.
    """
    m = graph.m
    if m > universe_cap():
        raise SizingError(f"universe size {m} exceeds cap {universe_cap()}")
    if graph.n << m > edge_cap():
        raise SizingError("state space exceeds cap")
    indptr, indices = _csr_arrays(graph)
    kind, elem = _label_arrays(graph)
    parent, goal = walk_bfs(indptr, indices, kind, elem, np.int64(x), np.int64(v), np.int64(m))
    if goal < 0:
        return None
    rev = []
    s = int(goal)
    while s != -1:
        rev.append(s >> m)
        s = int(parent[s])
    # rev lists the reversed walk from its goal back to the start state,
    # which is exactly the walk in forward order.
    return rev


@dataclass(frozen=True)
class SinkSummary:
    component: int
    vertex_count: int
    sets_by_node: dict[int, list[ElementSet]]
    diameter: int | None

    def count_at(self, v: int) -> int:
        return len(self.sets_by_node.get(v, []))

    def distinct_sets(self, nodes: Sequence[int] | None = None) -> int:
        pool = set()
        for v, xs in self.sets_by_node.items():
            if nodes is None or v in nodes:
                pool.update(xs)
        return len(pool)


def sink_summary(d: DecoratedGraph, diameter_limit: int = 2000) -> SinkSummary:
    sinks = sink_components(d)
    if len(sinks) != 1:
        raise RuntimeError(f"expected one sink component, found {len(sinks)}")
    c = sinks[0]
    verts = np.flatnonzero(d.comp == c)
    by_node: dict[int, list[int]] = {}
    for k in verts:
        by_node.setdefault(int(d.node[k]), []).append(int(d.aset[k]))
    for xs in by_node.values():
        xs.sort()
    diam = None
    if len(verts) <= diameter_limit:
        diam = 0
        for s in verts:
            dist = {int(s): 0}
            q = deque([int(s)])
            while q:
                u = q.popleft()
                for w in d.successors(u):
                    w = int(w)
                    if w not in dist:
                        dist[w] = dist[u] + 1
                        q.append(w)
            diam = max(diam, max(dist.values()))
    return SinkSummary(c, int(len(verts)), by_node, diam)


# ---------------------------------------------------------------- export


def vertex_name(d: DecoratedGraph, k: int) -> str:
    v, x = d.vertex(k)
    return f"{v}|{x:x}"


def export_adjacency(d: DecoratedGraph) -> str:
    lines = []
    for k in range(d.n_vertices):
        succ = " ".join(vertex_name(d, int(w)) for w in d.successors(k))
        lines.append(f"{vertex_name(d, k)} [c{int(d.comp[k])}] -> {succ}".rstrip())
    return "\n".join(lines) + "\n"


def condensation_edges(d: DecoratedGraph) -> list[tuple[int, int]]:
    src = np.repeat(d.comp, np.diff(d.indptr))
    dst = d.comp[d.indices]
    keep = src != dst
    pairs = np.unique(np.stack([src[keep], dst[keep]], axis=1), axis=0) if keep.any() else np.zeros((0, 2), int)
    return [(int(a), int(b)) for a, b in pairs]


def export_dot(d: DecoratedGraph, condensed: bool = False) -> str:
    out = ["digraph dec {"]
    if condensed:
        for c in range(d.n_comp):
            shape = "doublecircle" if d.is_sink[c] else "circle"
            out.append(f'  c{c} [shape={shape}, label="c{c}"];')
        for a, b in condensation_edges(d):
            out.append(f"  c{a} -> c{b};")
    else:
        for k in range(d.n_vertices):
            out.append(f'  v{k} [label="{vertex_name(d, k)}"];')
        for k in range(d.n_vertices):
            for w in d.successors(k):
                out.append(f"  v{k} -> v{int(w)};")
    out.append("}")
    return "\n".join(out) + "\n"
