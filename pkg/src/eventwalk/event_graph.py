"""Labeled event graphs, element sets, walks and the extremal generators."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

# ElementSet is a plain int used as a bitset: bit k set <=> element k active.
ElementSet = int
EMPTY_SET: ElementSet = 0


class Kind(IntEnum):
    INSERT = 0
    DELETE = 1
    QUERY = 2

    @property
    def letter(self) -> str:
        return "idq"[self]

    @classmethod
    def from_letter(cls, ch: str) -> "Kind":
        try:
            return cls("idq".index(ch))
        except ValueError:
            raise ValueError(f"unknown operation letter {ch!r}") from None


@dataclass(frozen=True)
class Label:
    kind: Kind
    element: int


class GraphFormatError(ValueError):
    """Raised when a graph file cannot be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)


class InvalidWalk(ValueError):
    pass


@dataclass(frozen=True)
class EventGraph:
    labels: tuple[Label, ...]
    edges: frozenset[tuple[int, int]]
    universe: tuple[str, ...]
    values: tuple[float, ...] | None = None

    @classmethod
    def build(
        cls,
        labels: Iterable[tuple[Kind | str, int] | Label],
        edges: Iterable[tuple[int, int]],
        universe: Sequence[str] | int,
        values: Sequence[float] | None = None,
    ) -> "EventGraph":
        """Convenience constructor; edges are normalized to ``(min, max)`` pairs."""
        labs = []
        for lab in labels:
            if isinstance(lab, Label):
                labs.append(lab)
            else:
                kind, elem = lab
                if isinstance(kind, str):
                    kind = Kind.from_letter(kind)
                labs.append(Label(Kind(kind), int(elem)))
        if isinstance(universe, int):
            universe = [str(k + 1) for k in range(universe)]
        norm = frozenset((min(u, v), max(u, v)) for u, v in edges)
        vals = None if values is None else tuple(float(x) for x in values)
        return cls(tuple(labs), norm, tuple(universe), vals)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def m(self) -> int:
        return len(self.universe)

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        nb: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            if u == v:
                nb[u].append(v)
                continue
            nb[u].append(v)
            nb[v].append(u)
        return tuple(tuple(sorted(x)) for x in nb)

    @cached_property
    def full_set(self) -> ElementSet:
        return (1 << self.m) - 1

    def element_index(self, name: str) -> int:
        try:
            return self.universe.index(name)
        except ValueError:
            raise KeyError(f"unknown element {name!r}") from None

    def label_name(self, v: int) -> str:
        lab = self.labels[v]
        return lab.kind.letter + self.universe[lab.element]

    def nodes_of(self, element: int) -> list[int]:
        return [v for v, lab in enumerate(self.labels) if lab.element == element]

    def is_adjacent(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edges


# ---------------------------------------------------------------- sets


def set_of(elements: Iterable[int]) -> ElementSet:
    x = 0
    for e in elements:
        x |= 1 << e
    return x


def members(x: ElementSet) -> list[int]:
    out = []
    k = 0
    while x:
        if x & 1:
            out.append(k)
        x >>= 1
        k += 1
    return out


def format_set(graph: EventGraph, x: ElementSet) -> str:
    return "{" + ",".join(graph.universe[e] for e in members(x)) + "}"


def parse_set(graph: EventGraph, spec: str) -> ElementSet:
    """Parse ``"1,3"`` style names or a ``0x..`` bitset; ``""``/``"{}"`` is empty."""
    spec = spec.strip().strip("{}").strip()
    if not spec:
        return EMPTY_SET
    if spec.lower().startswith("0x"):
        x = int(spec, 16)
        if x >> graph.m:
            raise ValueError(f"bitset {spec} exceeds universe of size {graph.m}")
        return x
    return set_of(graph.element_index(tok.strip()) for tok in spec.split(",") if tok.strip())


def apply_label(x: ElementSet, label: Label) -> ElementSet:
    if label.kind == Kind.INSERT:
        return x | (1 << label.element)
    if label.kind == Kind.DELETE:
        return x & ~(1 << label.element)
    return x


# ---------------------------------------------------------------- validation


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violation: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def _connected(graph: EventGraph) -> bool:
    if graph.n == 0:
        return False
    seen = {0}
    todo = [0]
    while todo:
        u = todo.pop()
        for w in graph.adjacency[u]:
            if w not in seen:
                seen.add(w)
                todo.append(w)
    return len(seen) == graph.n


def validate(graph: EventGraph, mode: str = "strict") -> ValidationReport:
    """Check the standing assumptions for ``mode`` ("strict" or "cycle")."""
    if mode not in ("strict", "cycle"):
        raise ValueError(f"unknown mode {mode!r}")
    n, m = graph.n, graph.m
    if n == 0:
        return ValidationReport(False, "graph has no nodes")
    if len(set(graph.universe)) != m:
        return ValidationReport(False, "universe names are not distinct")
    for v, lab in enumerate(graph.labels):
        if not 0 <= lab.element < m:
            return ValidationReport(False, f"node {v} references element outside the universe")
    for u, v in graph.edges:
        if u == v:
            return ValidationReport(False, f"self-loop at node {u}")
        if not (0 <= u < n and 0 <= v < n):
            return ValidationReport(False, f"edge ({u},{v}) references a missing node")
    if not _connected(graph):
        return ValidationReport(False, "graph is not connected")

    if mode == "strict":
        if m == 0:
            return ValidationReport(False, "universe is empty")
        has_i = [False] * m
        has_d = [False] * m
        for v, lab in enumerate(graph.labels):
            if lab.kind == Kind.QUERY:
                return ValidationReport(False, f"query label at node {v} in strict mode")
            if lab.kind == Kind.INSERT:
                has_i[lab.element] = True
            else:
                has_d[lab.element] = True
        for e in range(m):
            if not has_i[e]:
                return ValidationReport(False, f"element {graph.universe[e]} lacks insert node")
            if not has_d[e]:
                return ValidationReport(False, f"element {graph.universe[e]} lacks delete node")
        return ValidationReport(True)

    if n < 3:
        return ValidationReport(False, "cycle needs at least 3 nodes")
    ring = {(min(k, (k + 1) % n), max(k, (k + 1) % n)) for k in range(n)}
    if set(graph.edges) != ring:
        return ValidationReport(False, "edges do not form the cycle 0..n-1")
    if graph.values is None or len(graph.values) != m:
        return ValidationReport(False, "cycle mode needs one value per element")
    if not all(np.isfinite(graph.values)):
        return ValidationReport(False, "element values must be finite reals")
    if len(set(graph.values)) != m:
        return ValidationReport(False, "element values are not distinct")
    return ValidationReport(True)


# ---------------------------------------------------------------- walks


def check_walk(graph: EventGraph, walk: Sequence[int]) -> None:
    for k, v in enumerate(walk):
        if not 0 <= v < graph.n:
            raise InvalidWalk(f"position {k}: node {v} does not exist")
        if k and not graph.is_adjacent(walk[k - 1], v):
            raise InvalidWalk(f"position {k}: nodes {walk[k - 1]} and {v} are not adjacent")


def lift(graph: EventGraph, walk: Sequence[int], x0: ElementSet = EMPTY_SET) -> list[tuple[int, ElementSet]]:
    """Decorate a walk with active sets.

    The first position keeps ``x0``; every later position applies its own label.
    """
    check_walk(graph, walk)
    out: list[tuple[int, ElementSet]] = []
    x = x0
    for k, v in enumerate(walk):
        if k:
            x = apply_label(x, graph.labels[v])
        out.append((v, x))
    return out


def project(decorated: Sequence[tuple[int, ElementSet]]) -> tuple[int, ...]:
    return tuple(v for v, _ in decorated)


# ---------------------------------------------------------------- generators


def gen_lower_bound_path(m: int) -> tuple[EventGraph, int]:
    """Path i_m..i_1, d_m, d_1..d_m; returns the graph and the middle node."""
    if m < 2:
        raise ValueError("m must be at least 2")
    labels = [(Kind.INSERT, e) for e in range(m - 1, -1, -1)]
    labels.append((Kind.DELETE, m - 1))
    labels += [(Kind.DELETE, e) for e in range(m)]
    n = len(labels)
    g = EventGraph.build(labels, [(k, k + 1) for k in range(n - 1)], m)
    return g, m


def lower_bound_target(m: int) -> ElementSet:
    """Odd elements 1, 3, .., 2*floor(m/2)-1 (as 1-based names)."""
    return set_of(range(0, 2 * (m // 2) - 1, 2))


def gen_exponential_cycle(n: int) -> EventGraph:
    if n < 4 or n % 2:
        raise ValueError("n must be an even integer >= 4")
    h = n // 2
    labels = []
    for k in range(n):
        e = k if k < h else n - 1 - k
        labels.append((Kind.INSERT if k < h else Kind.DELETE, e))
    edges = [(k, (k + 1) % n) for k in range(n)]
    return EventGraph.build(labels, edges, h, values=[float(e + 1) for e in range(h)])


@dataclass(frozen=True)
class ReductionInstance:
    graph: EventGraph
    query_node: int
    target: ElementSet
    k: int
    copies: tuple[tuple[int, ...], tuple[int, ...]] = field(default=((), ()))


def gen_hamiltonian_reduction(n: int, edges: Iterable[tuple[int, int]]) -> ReductionInstance:
    """Event graph whose short certifying walks at v1 match Hamiltonian paths.

    ``edges`` is a simple undirected graph on vertices ``0..n-1``.
    """
    if n < 1:
        raise ValueError("input graph must have at least one vertex")
    edge_list = sorted({(min(a, b), max(a, b)) for a, b in edges})
    for a, b in edge_list:
        if a == b or not (0 <= a < n and 0 <= b < n):
            raise ValueError(f"invalid edge ({a},{b})")
    g1 = tuple(range(n))
    g2 = tuple(range(n, 2 * n))
    v1, v2 = 2 * n, 2 * n + 1
    labels = [(Kind.INSERT, a) for a in range(n)]
    labels += [(Kind.DELETE, a) for a in range(n)]
    labels += [(Kind.INSERT, n), (Kind.DELETE, n)]
    out_edges = []
    for a, b in edge_list:
        out_edges.append((g1[a], g1[b]))
        out_edges.append((g2[a], g2[b]))
    out_edges.append((v1, v2))
    out_edges += [(v1, w) for w in g1 + g2]
    g = EventGraph.build(labels, out_edges, n + 1)
    return ReductionInstance(g, v1, g.full_set, n + 2, (g1, g2))


def has_hamiltonian_path(n: int, edges: Iterable[tuple[int, int]]) -> bool:
    """Brute force over vertex orders (fine for n <= 8)."""
    adj = {(min(a, b), max(a, b)) for a, b in edges}
    if n <= 1:
        return n == 1
    for perm in itertools.permutations(range(n)):
        if perm[0] > perm[-1]:
            continue
        if all((min(a, b), max(a, b)) in adj for a, b in zip(perm, perm[1:])):
            return True
    return False


def random_strict_graph(rng: np.random.Generator, n: int, m: int, p_extra: float = 0.3) -> EventGraph:
    """Random connected strict-mode graph; every element gets an insert and a delete."""
    if n < 2 * m or m < 1:
        raise ValueError("need n >= 2m and m >= 1")
    kinds = [Kind.INSERT] * m + [Kind.DELETE] * m
    elems = list(range(m)) * 2
    for _ in range(n - 2 * m):
        kinds.append(Kind(int(rng.integers(2))))
        elems.append(int(rng.integers(m)))
    order = rng.permutation(n)
    labels = [(kinds[k], elems[k]) for k in order]
    edges = set()
    for v in range(1, n):
        u = int(rng.integers(v))
        edges.add((u, v))
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p_extra:
                edges.add((u, v))
    return EventGraph.build(labels, edges, m)


def random_cycle_graph(
    rng: np.random.Generator,
    n: int,
    n_elements: int | None = None,
    query_only: int | None = None,
    query_frac: float = 0.4,
) -> EventGraph:
    """Random cycle instance with exactly one insert node per insertable element.

    Elements ``0..n_elements-1`` are insertable; a further ``query_only``
    elements appear only in query labels. Values are a random permutation.
    """
    if n < 3:
        raise ValueError("cycle needs at least 3 nodes")
    k = n_elements if n_elements is not None else max(1, n // 4)
    q = query_only if query_only is not None else max(1, n // 8)
    if k > n:
        raise ValueError("more insertable elements than nodes")
    labels: list[tuple[Kind, int]] = [(Kind.INSERT, e) for e in range(k)]
    for _ in range(n - k):
        if rng.random() < query_frac:
            labels.append((Kind.QUERY, int(rng.integers(k + q))))
        else:
            labels.append((Kind.DELETE, int(rng.integers(k))))
    order = rng.permutation(n)
    labels = [labels[i] for i in order]
    values = rng.permutation(k + q).astype(float)
    edges = [(v, (v + 1) % n) for v in range(n)]
    return EventGraph.build(labels, edges, k + q, values=values)


# ---------------------------------------------------------------- text format


def format_graph(graph: EventGraph) -> str:
    lines = ["universe: " + " ".join(graph.universe)]
    if graph.values is not None:
        lines.append("values: " + " ".join(f"{name}={val!r}" for name, val in zip(graph.universe, graph.values)))
    for v in range(graph.n):
        nb = " ".join(str(w) for w in graph.adjacency[v])
        lines.append(f"{v} {graph.label_name(v)} {nb}".rstrip())
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> EventGraph:
    universe: list[str] | None = None
    values: dict[str, float] | None = None
    nodes: list[tuple[str, str, list[int], int]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("universe:"):
            universe = line.split(":", 1)[1].split()
            continue
        if line.startswith("values:"):
            values = {}
            for tok in line.split(":", 1)[1].split():
                name, eq, val = tok.partition("=")
                if not eq:
                    raise GraphFormatError(f"bad value entry {tok!r}", lineno)
                try:
                    values[name] = float(val)
                except ValueError:
                    raise GraphFormatError(f"bad real {val!r}", lineno) from None
            continue
        parts = line.split()
        if len(parts) < 2:
            raise GraphFormatError("node line needs an id and a label", lineno)
        try:
            nid = int(parts[0])
            nbrs = [int(t) for t in parts[2:]]
        except ValueError:
            raise GraphFormatError("node ids must be integers", lineno) from None
        if nid != len(nodes):
            raise GraphFormatError(f"expected node id {len(nodes)}, got {nid}", lineno)
        lab = parts[1]
        if len(lab) < 2 or lab[0] not in "idq":
            raise GraphFormatError(f"bad label {lab!r}", lineno)
        nodes.append((lab[0], lab[1:], nbrs, lineno))
    if not nodes:
        raise GraphFormatError("no nodes found")
    if universe is None:
        universe = list(dict.fromkeys(name for _, name, _, _ in nodes))
    index = {name: k for k, name in enumerate(universe)}
    labels = []
    edges = set()
    for nid, (letter, name, nbrs, lineno) in enumerate(nodes):
        if name not in index:
            raise GraphFormatError(f"element {name!r} not in universe", lineno)
        labels.append((Kind.from_letter(letter), index[name]))
        for w in nbrs:
            if not 0 <= w < len(nodes):
                raise GraphFormatError(f"neighbor {w} does not exist", lineno)
            edges.add((min(nid, w), max(nid, w)))
    vals = None
    if values is not None:
        missing = [u for u in universe if u not in values]
        if missing:
            raise GraphFormatError(f"missing values for {missing}")
        vals = [values[u] for u in universe]
    return EventGraph.build(labels, edges, universe, vals)


def read_graph(path: str | Path) -> EventGraph:
    return parse_graph(Path(path).read_text())


def write_graph(graph: EventGraph, path: str | Path) -> None:
    Path(path).write_text(format_graph(graph))


def parse_walk(text: str) -> list[int]:
    return [int(t) for t in text.split()]


def bfs_distances(graph: EventGraph, source: int, allowed: Sequence[bool] | None = None) -> list[int]:
    dist = [-1] * graph.n
    dist[source] = 0
    q = deque([source])
    while q:
        u = q.popleft()
        for w in graph.adjacency[u]:
            if dist[w] < 0 and (allowed is None or allowed[w]):
                dist[w] = dist[u] + 1
                q.append(w)
    return dist
