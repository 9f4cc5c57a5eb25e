"""Shape of a strip structure: node tree, table offsets and build tasks.

The shape depends only on the number of points and on ``s``, so it can be
planned once and reused for every block of the same size.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# node record fields
F_M, F_G, F_B, F_DEPTH, F_CHILD, F_MEM, F_TAB, F_BASE, F_S = range(9)
NODE_FIELDS = 9

# per-point arrays, indexed [field, depth, point]
P_LOC, P_SIDX, P_GRP, P_NODE = range(4)

# link tables (internal nodes), indexed [table, offset + anchor * g + group]
YL, YR, AR, AL, BR, BL, ZUR, ZUL, ZDR, ZDL = range(10)
N_LINK = 10

# base tables, indexed [table, offset + anchor * m + other]
T2R, T2L, TAR, TAL, TBR, TBL = range(6)
N_BASE = 6

# build task kinds
K_INIT, K_PART, K_PRIME_F, K_FWD, K_PRIME_B, K_BWD, K_BASE_ONE, K_BASE_TWO = range(8)


def group_size(m: int, s: int) -> int:
    """Smallest b with b**s >= m**(s-1), i.e. ceil(m ** (1 - 1/s))."""
    target = m ** (s - 1)
    b = max(1, int(round(m ** (1.0 - 1.0 / s))))
    while b**s < target:
        b += 1
    while b > 1 and (b - 1) ** s >= target:
        b -= 1
    return b


@dataclass(frozen=True)
class Layout:
    m: int
    s: int
    nodes: np.ndarray
    depth: int
    mem_total: int
    tab_total: int
    base_total: int
    gmax: int
    tasks: np.ndarray  # rows: kind, node, item count

    @property
    def n_nodes(self) -> int:
        return int(self.nodes.shape[0])

    def storage_cells(self) -> int:
        return int(
            N_LINK * self.tab_total
            + N_BASE * self.base_total
            + 2 * self.mem_total
            + 4 * self.depth * self.m
            + NODE_FIELDS * self.n_nodes
        )


@lru_cache(maxsize=256)
def plan(m: int, s: int) -> Layout:
    if m < 1 or s < 1:
        raise ValueError("need m >= 1 and s >= 1")
    rows: list[list[int]] = []
    queue = [(m, s, 0)]
    head = 0
    # breadth-first so that children of a node get consecutive ids
    while head < len(queue):
        size, lev, dep = queue[head]
        head += 1
        if lev == 1 or size <= 2:
            rows.append([size, 0, size, dep, -1, 0, 0, 0, lev])
            continue
        b = group_size(size, lev)
        g = -(-size // b)
        child0 = len(queue)
        rows.append([size, g, b, dep, child0, 0, 0, 0, lev])
        for k in range(g):
            queue.append((min(b, size - k * b), lev - 1, dep + 1))
    nodes = np.array(rows, dtype=np.int64)
    mem = tab = base = 0
    gmax = 1
    for r in nodes:
        r[F_MEM] = mem
        mem += r[F_M]
        if r[F_G]:
            r[F_TAB] = tab
            tab += r[F_M] * r[F_G]
            gmax = max(gmax, int(r[F_G]))
        else:
            r[F_BASE] = base
            base += r[F_M] * r[F_M]
    tasks = [[K_INIT, 0, m]]
    for z, r in enumerate(nodes):
        size = int(r[F_M])
        if r[F_G]:
            tasks += [
                [K_PART, z, size],
                [K_PRIME_F, z, size],
                [K_FWD, z, size],
                [K_PRIME_B, z, size],
                [K_BWD, z, size],
            ]
        else:
            tasks += [[K_BASE_ONE, z, size], [K_BASE_TWO, z, size]]
    depth = int(nodes[:, F_DEPTH].max()) + 1
    return Layout(m, s, nodes, depth, mem, tab, base, gmax, np.array(tasks, dtype=np.int64))


def item_cost(layout_nodes: np.ndarray, kind: int, z: int) -> int:
    """Primitive-op charge of one work item of a task (mirrors the kernel)."""
    r = layout_nodes[z]
    if kind in (K_FWD, K_BWD):
        return int(r[F_G] + r[F_B] + 1)
    if kind in (K_BASE_ONE, K_BASE_TWO):
        return int(4 * r[F_M] + 1)
    if kind == K_PART:
        return 2
    return 1


def max_item_cost(layout: Layout) -> int:
    return max(item_cost(layout.nodes, int(k), int(z)) for k, z, _ in layout.tasks)


def total_cost(layout: Layout) -> int:
    return sum(item_cost(layout.nodes, int(k), int(z)) * int(c) for k, z, c in layout.tasks)
