"""Successor search along a walk on a cycle event graph.

Two engines share the kernels in :mod:`.kernels`:

``adversarial``
    one strip structure over the whole cycle; any direction sequence.
``random``
    the cycle is cut into about ``sqrt(n)`` paths, twice, with the second
    partition shifted by half a path. Each partition (track) keeps links only
    for the path it stands in and rebuilds them in the background when the
    walk leaves it, while the other track answers.

Direction 1 (``"cw"``) moves from node ``v`` to ``v + 1``.
"""

from __future__ import annotations

import hashlib
import json
import math
from bisect import bisect_left, insort
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from ..event_graph import EventGraph, Kind, validate
from ..strip.layout import N_BASE, N_LINK, plan, max_item_cost, total_cost
from . import kernels as K

MODES = ("adversarial", "random")
AUDIT_MODES = ("off", "sampled", "full")
REPORT_SCHEMA = 1
_KIND_ORDER = {Kind.DELETE: 0, Kind.QUERY: 1, Kind.INSERT: 2}


class EngineConfigError(ValueError):
    pass


class EnginePoisoned(RuntimeError):
    pass


@dataclass(frozen=True)
class StepResult:
    node: int
    answer: float | None  # None when the node is not a query
    range_queries: int
    ops: int


def _parse_direction(d) -> int:
    if d in (1, "cw", "+", "+1", True):
        return 1
    if d in (0, -1, "ccw", "-", "-1", False):
        return 0
    raise ValueError(f"unknown direction {d!r}")


# ---------------------------------------------------------------- static tables


@dataclass(frozen=True)
class NodeTables:
    """Per-node arrays in the engine's internal numbering."""

    kind: np.ndarray
    elem: np.ndarray  # element id = rank of its value
    rank: np.ndarray
    rnode: np.ndarray
    next_higher_cw: np.ndarray
    next_higher_ccw: np.ndarray
    top: np.ndarray  # top rank of each element class, then head, inf
    values: np.ndarray  # value of each element id

    @property
    def n(self) -> int:
        return int(self.kind.size)

    @property
    def n_elements(self) -> int:
        return int(self.values.size)


def _next_higher(order: list[int], rank: np.ndarray, n: int) -> dict[int, int]:
    """Cyclic next-greater-rank successor within one element class.

    ``order`` lists the class's nodes by position; returns node -> node or -1.
    """
    k = len(order)
    res = {v: -1 for v in order}
    stack: list[int] = []
    for idx in range(2 * k - 1, -1, -1):
        v = order[idx % k]
        while stack and rank[stack[-1]] <= rank[v]:
            stack.pop()
        if idx < k and stack and stack[-1] != v:
            res[v] = stack[-1]
        stack.append(v)
    return res


def node_tables(graph: EventGraph) -> NodeTables:
    n, m = graph.n, graph.m
    vals = np.asarray(graph.values, dtype=float)
    order = np.argsort(vals, kind="stable")
    eid = np.empty(m, np.int64)
    eid[order] = np.arange(m)
    kind = np.array([int(lab.kind) for lab in graph.labels], np.int64)
    elem = np.array([eid[lab.element] for lab in graph.labels], np.int64)
    korder = np.array([_KIND_ORDER[Kind(k)] for k in kind], np.int64)
    rnode = np.lexsort((np.arange(n), korder, elem)).astype(np.int64)
    rank = np.empty(n, np.int64)
    rank[rnode] = np.arange(n)
    counts = np.bincount(elem, minlength=m)
    top = np.empty(m + 2, np.int64)
    top[:m] = np.cumsum(counts) - 1
    top[m] = -1
    top[m + 1] = n - 1
    nh_cw = np.full(n, -1, np.int64)
    nh_ccw = np.full(n, -1, np.int64)
    by_elem: dict[int, list[int]] = {}
    for v in range(n):
        by_elem.setdefault(int(elem[v]), []).append(v)
    for nodes in by_elem.values():
        for v, w in _next_higher(nodes, rank, n).items():
            nh_cw[v] = w
        for v, w in _next_higher(nodes[::-1], rank, n).items():
            nh_ccw[v] = w
    return NodeTables(kind, elem, rank, rnode, nh_cw, nh_ccw, top, vals[order])


def check_engine_graph(graph: EventGraph) -> None:
    rep = validate(graph, "cycle")
    if not rep.ok:
        raise EngineConfigError(rep.violation)
    seen: set[int] = set()
    for lab in graph.labels:
        if lab.kind == Kind.INSERT:
            if lab.element in seen:
                raise EngineConfigError(
                    f"element {graph.universe[lab.element]} has more than one insert node"
                )
            seen.add(lab.element)


# ---------------------------------------------------------------- engine


def default_bg_budget(n: int, block_cost: int, max_item: int, max_step: int) -> int:
    """Ops per step: finish a block within n/16 steps and outpace replay."""
    window = max(1, n // 16)
    return int(max(-(-block_cost // window), max_item, 3 * max_step))


class CycleEngine:
    def __init__(
        self,
        graph: EventGraph,
        mode: str = "adversarial",
        s: int | None = None,
        epsilon: float | None = None,
        bg_budget: int | None = None,
        seed: int = 0,
        audit: str = "off",
        audit_every: int | None = None,
    ):
        if mode not in MODES:
            raise EngineConfigError(f"unknown mode {mode!r}")
        if audit not in AUDIT_MODES:
            raise EngineConfigError(f"unknown audit mode {audit!r}")
        check_engine_graph(graph)
        n = graph.n
        if mode == "random" and n < 4:
            raise EngineConfigError("random mode needs at least 4 nodes")
        if epsilon is not None:
            if not 0 < epsilon <= 1:
                raise EngineConfigError("epsilon must lie in (0, 1]")
            s_eps = math.ceil(1 / epsilon - 1e-12)
            if s is not None and s != s_eps:
                raise EngineConfigError("s and epsilon disagree")
            s = s_eps
        if mode == "random":
            if s not in (None, 3):
                raise EngineConfigError("random mode uses s = 3")
            s = 3
        s = 3 if s is None else int(s)
        if s < 1:
            raise EngineConfigError("s must be at least 1")

        self.graph = graph
        self.mode = mode
        self.s = s
        self.seed = int(seed)
        self.tables = tab = node_tables(graph)
        self.n = n
        self._rng = np.random.default_rng(seed)
        e = tab.n_elements

        if mode == "adversarial":
            n_tracks, path_len, n_paths, offsets = 1, n, 1, (0, 0)
            lengths = [n]
        else:
            n_tracks = 2
            path_len = math.isqrt(n)
            n_paths = n // path_len
            offsets = (0, math.isqrt(n // 4))
            lengths = [path_len, n - (n_paths - 1) * path_len]
        self.n_tracks = n_tracks
        self.path_len = path_len
        self.n_paths = n_paths
        self.offsets = offsets
        layouts = [plan(ln + 2, s) for ln in lengths]
        self.layouts = layouts
        lmax = max(lengths)
        max_step = 3 * (5 * s + 2) + 40
        self.max_step_ops = max_step
        self.block_cost = n + max(total_cost(lay) for lay in layouts)
        if mode == "random":
            floor = max(max_item_cost(lay) for lay in layouts)
            if bg_budget is None:
                bg_budget = default_bg_budget(n, self.block_cost, floor, max_step)
            if bg_budget < max(floor, max_step):
                raise EngineConfigError(f"bg_budget must be at least {max(floor, max_step)}")
        self.bg_budget = int(bg_budget or 0)

        if audit == "full":
            self.audit_every = 1
        elif audit == "sampled":
            self.audit_every = int(audit_every or max(1, n // 4))
        else:
            self.audit_every = 0

        n_slots = 1 if mode == "adversarial" else 2 * min(8, n_paths)
        self.n_slots = n_slots
        prm = np.zeros(K.N_PRM, np.int64)
        prm[K.P_N] = n
        prm[K.P_E] = e
        prm[K.P_T] = n_tracks
        prm[K.P_L] = path_len
        prm[K.P_NP] = n_paths
        prm[K.P_OFF0] = offsets[0]
        prm[K.P_OFF1] = offsets[1]
        prm[K.P_WRAP] = 1 if mode == "adversarial" else 0
        prm[K.P_BUDGET] = self.bg_budget
        prm[K.P_LOGCAP] = n + 4096
        prm[K.P_S] = n_slots
        prm[K.P_MAXSTEP] = max_step

        gt = np.stack([tab.kind, tab.elem, tab.rank, tab.rnode, tab.next_higher_cw, tab.next_higher_ccw])
        nn = max(lay.n_nodes for lay in layouts)
        nt = max(lay.tasks.shape[0] for lay in layouts)
        ln_arr = np.zeros((2, nn, layouts[0].nodes.shape[1]), np.int64)
        lt_arr = np.zeros((2, nt, 3), np.int64)
        li_arr = np.zeros((2, 3), np.int64)
        for i in range(2):
            lay = layouts[min(i, len(layouts) - 1)]
            ln_arr[i, : lay.n_nodes] = lay.nodes
            lt_arr[i, : lay.tasks.shape[0]] = lay.tasks
            li_arr[i] = (lay.n_nodes, lay.tasks.shape[0], lay.gmax)
        depth = max(lay.depth for lay in layouts)
        mmax = lmax + 2
        mem = max(lay.mem_total for lay in layouts)
        tabn = max(max(lay.tab_total for lay in layouts), 1)
        basen = max(max(lay.base_total for lay in layouts), 1)
        scr = max(lay.gmax + lay.n_nodes for lay in layouts)
        S = n_slots
        z = np.zeros
        self.st = (
            prm,
            np.ascontiguousarray(gt),
            tab.top.copy(),
            z((n_tracks, 2, e + 2), np.int64),
            z((n_tracks, e + 2), np.int64),
            z((n_tracks, 2, e + 2), np.int64),
            z((n_tracks, 2, lmax), np.int64),
            z((n_tracks, K.N_TRS), np.int64),
            z((n_tracks, int(prm[K.P_LOGCAP]), 5), np.int64),
            z((S, K.N_BLK), np.int64),
            z((S, n + 1), np.int64),
            z((S, 2, lmax), np.int64),
            z((S, mmax), np.int64),
            z((S, 4, depth, mmax), np.int64),
            z((S, mem), np.int64),
            z((S, mem), np.int64),
            z((S, N_LINK, tabn), np.int64),
            z((S, N_BASE, basen), np.int64),
            z((S, scr), np.int64),
            z((S, 4), np.int64),
            ln_arr,
            lt_arr,
            li_arr,
            z(K.N_MET, np.int64),
            z(K.N_ENG, np.int64),
            z((n_tracks, n_paths), np.int64),
            z(e + 2, np.int64),
            z(8, np.int64),
        )
        self.initial_answer = self._decode(int(K.engine_init(self.st)))
        self.poisoned = False

    # ------------------------------------------------------------ state access

    @property
    def node(self) -> int:
        return int(self.st[K.I_ENG][K.E_NODE])

    @property
    def steps_done(self) -> int:
        return int(self.st[K.I_ENG][K.E_STEP])

    def active_values(self, track: int = 0) -> list[float]:
        lst = self.st[K.I_LST]
        e = self.tables.n_elements
        out = []
        x = int(lst[track, K.L_NXT, e])
        while x != e + 1:
            out.append(float(self.tables.values[x]))
            x = int(lst[track, K.L_NXT, x])
        return out

    def _decode(self, code: int) -> float | None:
        if code == K.ANS_NONE:
            return None
        if code == K.ANS_INF:
            return math.inf
        return float(self.tables.values[code])

    def decode_answers(self, codes: np.ndarray) -> np.ndarray:
        """Answer codes to values; non-queries become NaN."""
        vals = np.full(codes.shape, np.nan)
        q = codes >= 0
        vals[q] = self.tables.values[codes[q]]
        vals[codes == K.ANS_INF] = np.inf
        return vals

    # ------------------------------------------------------------ stepping

    def run_codes(self, directions: np.ndarray) -> np.ndarray:
        if self.poisoned:
            raise EnginePoisoned("engine stopped after an internal consistency failure")
        dirs = np.ascontiguousarray(directions, dtype=np.int8)
        ans = np.full(dirs.size, K.ANS_NONE, np.int64)
        done = K.run_steps(self.st, dirs, ans, np.int64(self.audit_every))
        if done < dirs.size or self.st[K.I_MET][K.M_POISON] > 0:
            self.poisoned = True
            raise EnginePoisoned(f"internal consistency failure at step {self.steps_done}")
        return ans

    def step(self, direction=None) -> StepResult:
        if direction is None:
            if self.mode != "random":
                raise ValueError("adversarial mode needs an explicit direction")
            d = int(self._rng.integers(0, 2))
        else:
            d = _parse_direction(direction)
        met = self.st[K.I_MET]
        ops0, rq0, ts0 = int(met[K.M_FG_SUM]), int(met[K.M_RQ_SUM]), int(met[K.M_TSTEPS])
        code = int(self.run_codes(np.array([d], np.int8))[0])
        rq = int(met[K.M_RQ_SUM]) - rq0
        return StepResult(self.node, self._decode(code), rq, int(met[K.M_FG_SUM]) - ops0)

    def audit(self) -> int:
        return int(K.audit(self.st))

    def metrics(self) -> dict:
        m = self.st[K.I_MET]
        steps = max(int(m[K.M_STEPS]), 1)
        tsteps = max(int(m[K.M_TSTEPS]), 1)
        nq = max(int(m[K.M_NQ]), 1)
        first = int(m[K.M_AUDIT_FIRST])
        return {
            "steps": int(m[K.M_STEPS]),
            "range_queries_mean": float(m[K.M_RQ_SUM]) / tsteps,
            "range_queries_max": int(m[K.M_RQ_MAX]),
            "range_queries_hist": [int(m[K.M_RQ0 + i]) for i in range(4)],
            "lookups_mean": float(m[K.M_LOOK_SUM]) / nq,
            "lookups_max": int(m[K.M_LOOK_MAX]),
            "fg_ops_mean": float(m[K.M_FG_SUM]) / steps,
            "fg_ops_max": int(m[K.M_FG_MAX]),
            "track_step_ops_max": int(m[K.M_STEPOPS_MAX]),
            "bg_ops_mean": float(m[K.M_BG_SUM]) / steps,
            "bg_ops_max": int(m[K.M_BG_MAX]),
            "bg_budget": self.bg_budget,
            "bg_over_budget": int(m[K.M_BG_OVER]),
            "not_ready_warmup": int(m[K.M_NR_WARM]),
            "not_ready_steady": int(m[K.M_NR_STEADY]),
            "steady_from_step": int(m[K.M_STEADY_AT]) if self.st[K.I_ENG][K.E_STEADY] else None,
            "path_entries": int(m[K.M_ENTRIES]),
            "forced_syncs": int(m[K.M_FORCED]),
            "track_mismatches": int(m[K.M_MISMATCH]),
            "poison": int(m[K.M_POISON]),
            "log_max": int(m[K.M_LOG_MAX]),
            "blocks_built": int(m[K.M_BUILDS]),
            "merges": int(m[K.M_MERGES]),
            "audits": int(m[K.M_AUDITS]),
            "audit_failures": int(m[K.M_AUDIT_FAIL]),
            "first_audit_failure": None if not first else {"step": first // 16, "code": first % 16},
        }


# ---------------------------------------------------------------- naive oracle


class NaiveEngine:
    """Ordered-set replay of the same walk semantics, for verification."""

    def __init__(self, graph: EventGraph):
        check_engine_graph(graph)
        self.graph = graph
        self.node = 0
        self._vals = np.asarray(graph.values, dtype=float)
        self._active: list[float] = []
        self.initial_answer = self._execute(0)

    def _execute(self, v: int) -> float | None:
        lab = self.graph.labels[v]
        y = float(self._vals[lab.element])
        i = bisect_left(self._active, y)
        present = i < len(self._active) and self._active[i] == y
        if lab.kind == Kind.INSERT:
            if not present:
                insort(self._active, y)
            return None
        if lab.kind == Kind.DELETE:
            if present:
                self._active.pop(i)
            return None
        return self._active[i] if i < len(self._active) else math.inf

    def step(self, direction) -> StepResult:
        d = _parse_direction(direction)
        self.node = (self.node + (1 if d else -1)) % self.graph.n
        return StepResult(self.node, self._execute(self.node), 0, 0)

    def active_values(self) -> list[float]:
        return list(self._active)


def naive_step(oracle: NaiveEngine, direction) -> StepResult:
    return oracle.step(direction)


def walk_nodes(n: int, directions: np.ndarray, start: int = 0) -> np.ndarray:
    """Nodes visited by a direction sequence, starting node included."""
    moves = np.where(np.asarray(directions) == 1, 1, -1).astype(np.int64)
    out = np.empty(moves.size + 1, np.int64)
    out[0] = start
    np.cumsum(moves, out=out[1:])
    out[1:] += start
    return np.mod(out, n)


def oracle_codes(tables: NodeTables, nodes: np.ndarray) -> np.ndarray:
    return K.oracle_replay(tables.kind, tables.elem, np.ascontiguousarray(nodes, np.int64), np.int64(tables.n_elements))


# ---------------------------------------------------------------- traces


ADVERSARIES = ("sweep", "oscillate", "restart")


def random_directions(steps: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).integers(0, 2, steps, dtype=np.int8)


def adversary_directions(strategy: str, n: int, steps: int, seed: int = 0, center: int = 0) -> np.ndarray:
    """Direction sequences for the adversarial engine.

    sweep: full laps alternating in direction. oscillate: back-and-forth
    swings of random width that drift slowly clockwise. restart: runs of
    random length and random direction.
    """
    rng = np.random.default_rng(seed)
    out = np.empty(steps, np.int8)
    k = 0
    if strategy == "sweep":
        d = 1
        while k < steps:
            span = min(n, steps - k)
            out[k : k + span] = d
            k += span
            d ^= 1
    elif strategy == "oscillate":
        while k < steps:
            w = int(rng.integers(1, 17))
            for d, span in ((1, w + 1), (0, w)):
                span = min(span, steps - k)
                out[k : k + span] = d
                k += span
    elif strategy == "restart":
        while k < steps:
            span = min(int(rng.geometric(1.0 / max(2, n // 10))), steps - k)
            out[k : k + span] = rng.integers(0, 2)
            k += span
    else:
        raise ValueError(f"unknown adversary strategy {strategy!r}")
    return out


@dataclass
class TraceReport:
    schema: int
    mode: str
    n: int
    s: int
    seed: int | None
    trace: str
    steps: int
    queries: int
    answers_digest: str
    oracle_checked: bool
    oracle_mismatches: int
    first_mismatch_step: int | None
    metrics: dict
    answers: np.ndarray | None = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        m = self.metrics
        return (
            self.oracle_mismatches == 0
            and m["poison"] == 0
            and m["audit_failures"] == 0
            and m["track_mismatches"] == 0
            and m["bg_over_budget"] == 0
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("answers")
        d["ok"] = self.ok
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def answers_digest(values: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(values, dtype="<f8").tobytes()).hexdigest()


def run_trace(
    engine: CycleEngine,
    directions: Sequence[int] | np.ndarray | None = None,
    steps: int | None = None,
    seed: int | None = None,
    oracle: bool = True,
    label: str | None = None,
    keep_answers: bool = False,
) -> TraceReport:
    """Run a direction sequence (or a seeded fair-coin walk of ``steps``).

    The answer list includes the start node's own answer first.
    """
    if directions is None:
        if steps is None:
            raise ValueError("need directions or a step count")
        seed = engine.seed if seed is None else seed
        directions = random_directions(steps, seed)
        label = label or "random"
    dirs = np.ascontiguousarray(directions, dtype=np.int8)
    start = engine.node
    codes = np.empty(dirs.size + 1, np.int64)
    codes[0] = K.ANS_NONE if engine.steps_done else _code_of(engine, engine.initial_answer)
    codes[1:] = engine.run_codes(dirs)
    mism, first = 0, None
    if oracle:
        if engine.steps_done != dirs.size:
            raise ValueError("oracle replay needs a fresh engine")
        want = oracle_codes(engine.tables, walk_nodes(engine.n, dirs, start))
        bad = np.flatnonzero(want != codes)
        mism = int(bad.size)
        first = int(bad[0]) if bad.size else None
    vals = engine.decode_answers(codes)
    return TraceReport(
        REPORT_SCHEMA,
        engine.mode,
        engine.n,
        engine.s,
        seed,
        label or "directions",
        int(dirs.size),
        int(np.count_nonzero(codes != K.ANS_NONE)),
        answers_digest(vals),
        oracle,
        mism,
        first,
        engine.metrics(),
        vals if keep_answers else None,
    )


def _code_of(engine: CycleEngine, answer: float | None) -> int:
    if answer is None:
        return K.ANS_NONE
    if answer == math.inf:
        return K.ANS_INF
    return int(np.searchsorted(engine.tables.values, answer))


# ---------------------------------------------------------------- block-level helpers


def boundary_query_fixup(block_values: Sequence[float], i: int, y_j: float) -> int:
    """Replace a foreign line ``y_j`` by a point of the augmented block.

    ``block_values`` are the path's values; the augmented block appends a
    lowest sentinel (index ``len``) and a highest one (``len + 1``). The strip
    between ``y_i`` and ``y_j`` contains the same block points as the strip
    between ``y_i`` and the returned point.
    """
    vals = np.asarray(block_values, dtype=float)
    ln = vals.size
    yi = vals[i]
    if y_j == yi:
        raise ValueError("foreign line coincides with the anchor")
    if y_j > yi:
        above = np.flatnonzero(vals >= y_j)
        return int(above[np.argmin(vals[above])]) if above.size else ln + 1
    below = np.flatnonzero(vals <= y_j)
    return int(below[np.argmax(vals[below])]) if below.size else ln


def clamp_wraparound(answer: int | None, i: int, direction: str = "right") -> int | None:
    """Empty out answers that only exist by wrapping past the path's end."""
    if answer is None:
        return None
    c = int(K.clamp_index(answer, i, direction == "right"))
    return None if c < 0 else c
