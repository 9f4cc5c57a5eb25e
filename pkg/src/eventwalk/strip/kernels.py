"""Build and query kernels for the strip structure.

Everything operates on flat arrays so the same code serves standalone
structures and the path blocks of the cycle engines. Points are identified
by their position ``0..N-1``; ``srank`` holds their value ranks.
"""

from __future__ import annotations

import numpy as np

from .._jit import kernel
from .layout import (
    AL,
    AR,
    BL,
    BR,
    F_B,
    F_BASE,
    F_CHILD,
    F_DEPTH,
    F_G,
    F_M,
    F_MEM,
    F_TAB,
    K_BASE_ONE,
    K_BASE_TWO,
    K_BWD,
    K_FWD,
    K_INIT,
    K_PART,
    K_PRIME_B,
    K_PRIME_F,
    P_GRP,
    P_LOC,
    P_NODE,
    P_SIDX,
    T2L,
    T2R,
    TAL,
    TAR,
    TBL,
    TBR,
    YL,
    YR,
    ZDL,
    ZDR,
    ZUL,
    ZUR,
)

# builder state slots
S_TASK, S_ITEM, S_OPS = 0, 1, 2
BUILDER_STATE = 4


@kernel
def dist_right(a, c, n):
    d = c - a
    if d <= 0:
        d += n
    return d


@kernel
def dist_left(a, c, n):
    d = a - c
    if d <= 0:
        d += n
    return d


@kernel
def closer(a, x, y, n, right):
    """Whichever of x, y comes first when scanning from a (-1 = none)."""
    if x < 0:
        return y
    if y < 0:
        return x
    if right:
        return x if dist_right(a, x, n) <= dist_right(a, y, n) else y
    return x if dist_left(a, x, n) <= dist_left(a, y, n) else y


@kernel
def improves(a, best, c, n, right):
    """True when candidate c beats the current best as seen from a."""
    if c < 0:
        return False
    if best < 0:
        return True
    if right:
        return dist_right(a, c, n) < dist_right(a, best, n)
    return dist_left(a, c, n) < dist_left(a, best, n)


@kernel
def task_item_cost(nodes, kind, z):
    if kind == K_FWD or kind == K_BWD:
        return nodes[z, F_G] + nodes[z, F_B] + 1
    if kind == K_BASE_ONE or kind == K_BASE_TWO:
        return 4 * nodes[z, F_M] + 1
    if kind == K_PART:
        return 2
    return 1


@kernel
def _sweep_row(nodes, pts, mem, links, scratch, z, p, n, right):
    d = nodes[z, F_DEPTH]
    g = nodes[z, F_G]
    child0 = nodes[z, F_CHILD]
    row = nodes[z, F_TAB] + pts[P_LOC, d, p] * g
    own = pts[P_GRP, d, p]
    sp = pts[P_SIDX, d, p]
    coff = nodes[child0 + own, F_MEM]
    cm = nodes[child0 + own, F_M]
    hi = np.int64(-1)
    lo = np.int64(-1)
    for k in range(cm):
        q = mem[coff + k]
        if q == p:
            continue
        if pts[P_SIDX, d, q] > sp:
            hi = closer(p, hi, q, n, right)
        else:
            lo = closer(p, lo, q, n, right)
    if right:
        ty, ta, tb, tzu, tzd = YR, AR, BR, ZUR, ZDR
    else:
        ty, ta, tb, tzu, tzd = YL, AL, BL, ZUL, ZDL
    for k in range(g):
        links[ty, row + k] = p if k == own else scratch[k]
    acc = np.int64(-1)
    for k in range(g - 1, -1, -1):
        links[ta, row + k] = acc
        acc = closer(p, acc, scratch[k], n, right)
    acc = np.int64(-1)
    for k in range(g):
        links[tb, row + k] = acc
        acc = closer(p, acc, scratch[k], n, right)
    for k in range(g):
        if k < own:
            links[tzu, row + k] = -1
        elif k == own:
            links[tzu, row + k] = hi
        else:
            links[tzu, row + k] = closer(p, links[tzu, row + k - 1], scratch[k], n, right)
    for k in range(g - 1, -1, -1):
        if k > own:
            links[tzd, row + k] = -1
        elif k == own:
            links[tzd, row + k] = lo
        else:
            links[tzd, row + k] = closer(p, links[tzd, row + k + 1], scratch[k], n, right)
    scratch[own] = p


@kernel
def _base_one(nodes, pts, mem, base, z, vi):
    d = nodes[z, F_DEPTH]
    mm = nodes[z, F_M]
    off = nodes[z, F_MEM]
    bo = nodes[z, F_BASE]
    st = pts[P_SIDX, d, mem[off + vi]]
    up = -1
    dn = -1
    for ui in range(mm):
        q = mem[off + ui]
        sq = pts[P_SIDX, d, q]
        if up < 0 and sq > st:
            up = q
        if dn < 0 and sq < st:
            dn = q
    for ui in range(mm - 1, -1, -1):
        q = mem[off + ui]
        base[TAR, bo + ui * mm + vi] = up
        base[TBR, bo + ui * mm + vi] = dn
        sq = pts[P_SIDX, d, q]
        if sq > st:
            up = q
        elif sq < st:
            dn = q
    up = -1
    dn = -1
    for ui in range(mm - 1, -1, -1):
        q = mem[off + ui]
        sq = pts[P_SIDX, d, q]
        if up < 0 and sq > st:
            up = q
        if dn < 0 and sq < st:
            dn = q
    for ui in range(mm):
        q = mem[off + ui]
        base[TAL, bo + ui * mm + vi] = up
        base[TBL, bo + ui * mm + vi] = dn
        sq = pts[P_SIDX, d, q]
        if sq > st:
            up = q
        elif sq < st:
            dn = q


@kernel
def _base_two(nodes, pts, mem, srt, base, z, ui):
    d = nodes[z, F_DEPTH]
    mm = nodes[z, F_M]
    off = nodes[z, F_MEM]
    bo = nodes[z, F_BASE]
    row = bo + ui * mm
    su = pts[P_SIDX, d, mem[off + ui]]
    for vi in range(mm):
        base[T2R, row + vi] = -1
        base[T2L, row + vi] = -1
    for side in range(2):
        tab = T2R if side == 0 else T2L
        hi = mm - 1  # ranks above hi are answered
        lo = 0  # ranks below lo are answered
        for step in range(1, mm):
            if side == 0:
                xi = ui + step
                if xi >= mm:
                    xi -= mm
            else:
                xi = ui - step
                if xi < 0:
                    xi += mm
            x = mem[off + xi]
            sx = pts[P_SIDX, d, x]
            if sx > su:
                for sv in range(sx + 1, hi + 1):
                    base[tab, row + pts[P_LOC, d, srt[off + sv]]] = x
                if sx < hi:
                    hi = sx
            else:
                for sv in range(lo, sx):
                    base[tab, row + pts[P_LOC, d, srt[off + sv]]] = x
                if sx > lo:
                    lo = sx


@kernel
def build_step(nodes, tasks, pts, mem, srt, links, base, srank, scratch, gmax, state, budget):
    """Advance the build by work items worth at most ``budget`` ops.

    Returns the ops spent. ``state[S_TASK] == len(tasks)`` once complete.
    """
    n = srank.shape[0]
    ntask = tasks.shape[0]
    used = 0
    while state[S_TASK] < ntask:
        t = state[S_TASK]
        kind = tasks[t, 0]
        z = tasks[t, 1]
        count = tasks[t, 2]
        cost = task_item_cost(nodes, kind, z)
        if used + cost > budget:
            break
        a = state[S_ITEM]
        d = nodes[z, F_DEPTH]
        off = nodes[z, F_MEM]
        if kind == K_INIT:
            pts[P_NODE, 0, a] = 0
            pts[P_LOC, 0, a] = a
            pts[P_SIDX, 0, a] = srank[a]
            mem[a] = a
            srt[srank[a]] = a
        elif kind == K_PART:
            g = nodes[z, F_G]
            b = nodes[z, F_B]
            child0 = nodes[z, F_CHILD]
            if a == 0:
                for k in range(g):
                    scratch[gmax + child0 + k] = 0
            p = mem[off + a]
            sg = pts[P_SIDX, d, p]
            k = sg // b
            c = child0 + k
            pts[P_GRP, d, p] = k
            li = scratch[gmax + c]
            scratch[gmax + c] = li + 1
            pts[P_LOC, d + 1, p] = li
            pts[P_SIDX, d + 1, p] = sg - k * b
            pts[P_NODE, d + 1, p] = c
            coff = nodes[c, F_MEM]
            mem[coff + li] = p
            srt[coff + sg - k * b] = p
        elif kind == K_PRIME_F:
            p = mem[off + a]
            scratch[pts[P_GRP, d, p]] = p
        elif kind == K_FWD:
            _sweep_row(nodes, pts, mem, links, scratch, z, mem[off + a], n, False)
        elif kind == K_PRIME_B:
            p = mem[off + nodes[z, F_M] - 1 - a]
            scratch[pts[P_GRP, d, p]] = p
        elif kind == K_BWD:
            _sweep_row(nodes, pts, mem, links, scratch, z, mem[off + nodes[z, F_M] - 1 - a], n, True)
        elif kind == K_BASE_ONE:
            _base_one(nodes, pts, mem, base, z, a)
        else:
            _base_two(nodes, pts, mem, srt, base, z, a)
        used += cost
        a += 1
        if a >= count:
            state[S_TASK] = t + 1
            state[S_ITEM] = 0
        else:
            state[S_ITEM] = a
    state[S_OPS] += used
    return used


@kernel
def strip_query(nodes, pts, links, base, n, i, j, strip, right):
    """Answer one query over points ``0..n-1``; returns (point or -1, lookups).

    strip 2 keeps the anchor ``i`` and splits into a Z block plus a one-sided
    query inside the group of ``j``. Strips 1 and 3 are one-sided from the
    start: everything above (below) the higher (lower) line.
    """
    look = np.int64(2)
    ri = pts[P_SIDX, 0, i]
    rj = pts[P_SIDX, 0, j]
    if strip == 2:
        mode = 0
        t = j
    elif strip == 1:
        mode = 1
        t = i if ri > rj else j
    else:
        mode = 2
        t = i if ri < rj else j
    z = 0
    a = i
    best = np.int64(-1)
    for _level in range(nodes.shape[0]):
        d = nodes[z, F_DEPTH]
        g = nodes[z, F_G]
        if g == 0:
            mm = nodes[z, F_M]
            u = pts[P_LOC, d, a]
            v = pts[P_LOC, d, t]
            if mode == 0:
                tab = T2R if right else T2L
            elif mode == 1:
                tab = TAR if right else TAL
            else:
                tab = TBR if right else TBL
            c = base[tab, nodes[z, F_BASE] + u * mm + v]
            look += 3
            if improves(i, best, c, n, right):
                best = c
            break
        la = pts[P_GRP, d, a]
        lt = pts[P_GRP, d, t]
        look += 2
        child0 = nodes[z, F_CHILD]
        if mode == 0 and la == lt:
            z = child0 + la
            continue
        row = nodes[z, F_TAB] + pts[P_LOC, d, a] * g
        look += 1
        if mode == 0:
            if ri < rj:
                c = links[ZUR if right else ZUL, row + lt - 1]
                mode = 2
            else:
                c = links[ZDR if right else ZDL, row + lt + 1]
                mode = 1
        elif mode == 1:
            c = links[AR if right else AL, row + lt]
        else:
            c = links[BR if right else BL, row + lt]
        if improves(i, best, c, n, right):
            best = c
        a = links[YL if right else YR, row + lt]
        look += 2
        z = child0 + lt
    return best, look


@kernel
def query_many(nodes, pts, links, base, n, qs):
    """Batch form of strip_query; ``qs`` rows are (i, j, strip, right)."""
    k = qs.shape[0]
    ans = np.empty(k, np.int64)
    looks = np.empty(k, np.int64)
    for r in range(k):
        a, l = strip_query(nodes, pts, links, base, n, qs[r, 0], qs[r, 1], qs[r, 2], qs[r, 3] == 1)
        ans[r] = a
        looks[r] = l
    return ans, looks
