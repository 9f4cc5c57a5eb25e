"""Array kernels of the cycle successor engines.

All engine state lives in one tuple of int64 arrays (see ``I_*``). A *track*
owns a private copy of the active list plus the two link families for the
block it currently stands in. A *block* is a slot holding one path of the
cycle: its rank-sorted positions, the boundary table ``succidx`` and a strip
structure over the positions plus two sentinels (``len`` lowest, ``len+1``
highest). The adversarial engine is the degenerate case of one track whose
single block is the whole cycle and wraps around.

Element ids are value ranks, so list order is id order. ``head = E`` and
``inf = E + 1`` bracket the list.
"""

from __future__ import annotations

import numpy as np

from .._jit import inline_kernel, kernel
from ..strip.kernels import BUILDER_STATE, S_TASK, build_step, closer, strip_query

# state tuple slots
I_PRM, I_G, I_ER, I_LST, I_ACT, I_LNK, I_AT, I_TRS, I_LOG, I_BLK = range(10)
I_SUCC, I_SORT, I_SRANK, I_PTS, I_MEM, I_SRT, I_LINKS, I_BASE, I_SCR, I_BST = range(10, 20)
I_LN, I_LT, I_LI, I_MET, I_ENG, I_PSLOT, I_SHADOW, I_OUT = range(20, 28)

# parameters
P_N, P_E, P_T, P_L, P_NP, P_OFF0, P_OFF1, P_WRAP, P_BUDGET, P_LOGCAP, P_S, P_MAXSTEP = range(12)
N_PRM = 16

# node table rows
G_KIND, G_ELEM, G_RANK, G_RNODE, G_NHI_CW, G_NHI_CCW = range(6)
KIND_INSERT, KIND_DELETE, KIND_QUERY = 0, 1, 2

# list rows
L_NXT, L_PRV = 0, 1

# track fields
T_STATUS, T_SLOT, T_POS, T_SUCC, T_NODE, T_HOME, T_JSLOT, T_JIDX = range(8)
T_JX, T_JF, T_JB, T_JPOS0, T_LHEAD, T_LCOUNT, T_VIRT = range(8, 15)
N_TRS = 16
ST_VALID, ST_CATCHUP, ST_CLEAR, ST_MERGE, ST_REPLAY = range(5)
NO_VIRT = -(2**40)

# log record fields
LG_NODE, LG_OP, LG_E, LG_P, LG_S = range(5)
OP_NONE, OP_INSERT, OP_DELETE = 0, 1, 2

# block fields
B_STATUS, B_PATH, B_TRACK, B_START, B_LEN, B_LAY, B_CUR, B_CNT = range(8)
N_BLK = 8
BS_FREE, BS_SWEEP, BS_STRIP, BS_READY = range(4)

# layout info
LI_NN, LI_NT, LI_GMAX = range(3)

# metrics
(
    M_ACC, M_RQACC, M_STEPS, M_FG_SUM, M_FG_MAX, M_RQ_MAX, M_RQ_SUM, M_TSTEPS,
    M_LOOK_MAX, M_LOOK_SUM, M_NQ, M_BG_SUM, M_BG_MAX, M_BG_OVER, M_NR_WARM, M_NR_STEADY,
    M_FORCED, M_MISMATCH, M_POISON, M_ENTRIES, M_STEADY_AT, M_STEPOPS_MAX, M_LOG_MAX, M_AUDITS,
    M_AUDIT_FAIL, M_AUDIT_FIRST, M_RQ0, M_RQ1, M_RQ2, M_RQ3, M_BUILDS, M_MERGES,
) = range(32)
N_MET = 40

# engine scalars
E_NODE, E_STEP, E_STEADY, E_IDLE = range(4)
N_ENG = 4

ANS_NONE, ANS_INF, ANS_POISON = -1, -2, -3


# ---------------------------------------------------------------- small helpers


@inline_kernel
def clamp_index(c, i, right):
    """Drop answers that wrapped past the end of a path."""
    if c < 0:
        return -1
    if right and c < i:
        return -1
    if (not right) and c > i:
        return -1
    return c


@inline_kernel
def blk_node(st, slot, pos):
    n = st[I_PRM][P_N]
    g = st[I_BLK][slot, B_START] + pos
    if g >= n:
        g -= n
    return g


@inline_kernel
def blk_pos(st, slot, g):
    d = g - st[I_BLK][slot, B_START]
    if d < 0:
        d += st[I_PRM][P_N]
    if d < st[I_BLK][slot, B_LEN]:
        return d
    return -1


@inline_kernel
def path_of(st, t, g):
    prm = st[I_PRM]
    d = g - prm[P_OFF0 + t]
    if d < 0:
        d += prm[P_N]
    k = d // prm[P_L]
    if k >= prm[P_NP]:
        k = prm[P_NP] - 1
    return k


@kernel
def path_start(st, t, k):
    prm = st[I_PRM]
    return (prm[P_OFF0 + t] + k * prm[P_L]) % prm[P_N]


@kernel
def path_len(st, k):
    prm = st[I_PRM]
    if k < prm[P_NP] - 1:
        return prm[P_L]
    return prm[P_N] - (prm[P_NP] - 1) * prm[P_L]


@kernel
def path_gap(st, a, b):
    np_ = st[I_PRM][P_NP]
    d = a - b
    if d < 0:
        d = -d
    if np_ - d < d:
        d = np_ - d
    return d


@inline_kernel
def top_rank(st, x):
    return st[I_ER][x]


@inline_kernel
def set_link(st, t, fam, x, pos):
    lnk = st[I_LNK]
    at = st[I_AT]
    old = lnk[t, fam, x]
    if old >= 0 and at[t, fam, old] == x:
        at[t, fam, old] = -1
    lnk[t, fam, x] = pos
    if pos >= 0:
        at[t, fam, pos] = x
    st[I_MET][M_ACC] += 2


@inline_kernel
def list_insert(st, t, e, p, s):
    lst = st[I_LST]
    lst[t, L_NXT, p] = e
    lst[t, L_PRV, e] = p
    lst[t, L_NXT, e] = s
    lst[t, L_PRV, s] = e
    st[I_ACT][t, e] = 1
    st[I_MET][M_ACC] += 4


@inline_kernel
def list_remove(st, t, e):
    lst = st[I_LST]
    p = lst[t, L_PRV, e]
    s = lst[t, L_NXT, e]
    lst[t, L_NXT, p] = s
    lst[t, L_PRV, s] = p
    lst[t, L_NXT, e] = -1
    lst[t, L_PRV, e] = -1
    st[I_ACT][t, e] = 0
    st[I_MET][M_ACC] += 4


# ---------------------------------------------------------------- range queries


@kernel
def block_query(st, slot, a, j, right):
    """Strip-2 query of a block between anchor ``a`` and boundary point ``j``."""
    li = st[I_BLK][slot, B_LAY]
    nodes = st[I_LN][li, : st[I_LI][li, LI_NN]]
    ln = st[I_BLK][slot, B_LEN]
    c, lk = strip_query(nodes, st[I_PTS][slot], st[I_LINKS][slot], st[I_BASE][slot], ln + 2, a, j, 2, right)
    met = st[I_MET]
    met[M_ACC] += lk
    met[M_RQACC] += 1
    met[M_NQ] += 1
    met[M_LOOK_SUM] += lk
    if lk > met[M_LOOK_MAX]:
        met[M_LOOK_MAX] = lk
    if st[I_PRM][P_WRAP] == 0:
        c = clamp_index(c, a, right)
    return c


@kernel
def first_in_run(st, slot, a, lo, hi, right, allow_self, shortcut):
    """First block position from ``a`` whose rank lies in ``(lo, hi]``.

    ``a``'s own rank must lie in that interval. The run is split at ``a``
    into a lower and an upper open strip; either is skipped when no block
    point falls inside it. ``shortcut`` says the upper part holds only nodes
    of ``a``'s own element, found through the next-higher table.
    """
    g = st[I_G]
    succ = st[I_SUCC]
    srt = st[I_SORT]
    ln = st[I_BLK][slot, B_LEN]
    wrap = st[I_PRM][P_WRAP] == 1
    node = blk_node(st, slot, a)
    sa = srt[slot, 1, a]
    best = np.int64(-1)
    idx = succ[slot, lo + 1] - 1
    st[I_MET][M_ACC] += 2
    if idx < sa - 1:
        j = ln if idx < 0 else srt[slot, 0, idx]
        best = block_query(st, slot, a, j, right)
    idx2 = succ[slot, hi + 1]
    if idx2 > sa + 1:
        if shortcut:
            nh = g[G_NHI_CW if right else G_NHI_CCW, node]
            st[I_MET][M_ACC] += 1
            c = np.int64(-1)
            if nh >= 0:
                c = blk_pos(st, slot, nh)
                if not wrap:
                    c = clamp_index(c, a, right)
        else:
            j = ln + 1 if idx2 >= ln else srt[slot, 0, idx2]
            c = block_query(st, slot, a, j, right)
        best = closer(a, best, c, ln, right)
    if allow_self and wrap:
        best = closer(a, best, a, ln, right)
    return best


# ---------------------------------------------------------------- one step of one track


@kernel
def track_step(st, t, a, right):
    """Move track ``t`` to block position ``a`` and execute that node's label.

    Returns the answer code (element, ``ANS_INF``, ``ANS_NONE``) or
    ``ANS_POISON``. The list operation performed is left in ``st[I_OUT]``.
    """
    trs = st[I_TRS]
    lst = st[I_LST]
    lnk = st[I_LNK]
    er = st[I_ER]
    g = st[I_G]
    out = st[I_OUT]
    met = st[I_MET]
    inf = st[I_PRM][P_E] + 1
    f = 0 if right else 1
    b = 1 - f
    slot = trs[t, T_SLOT]
    ln = st[I_BLK][slot, B_LEN]
    c = trs[t, T_POS]
    x0 = st[I_AT][t, f, a]
    met[M_ACC] += 1
    if x0 < 0:
        return ANS_POISON
    if 0 <= c < ln:
        set_link(st, t, b, trs[t, T_SUCC], c)
    node = blk_node(st, slot, a)
    k = g[G_KIND, node]
    e = g[G_ELEM, node]
    ra = g[G_RANK, node]
    out[0] = OP_NONE
    out[1] = e
    out[2] = -1
    out[3] = -1
    ans = ANS_NONE
    if k == KIND_INSERT and st[I_ACT][t, e] == 0:
        s = x0
        p = lst[t, L_PRV, s]
        list_insert(st, t, e, p, s)
        rp = er[p]
        rs = er[s]
        set_link(st, t, f, e, first_in_run(st, slot, a, rp, ra, right, True, False))
        set_link(st, t, f, s, first_in_run(st, slot, a, ra, rs, right, False, False))
        bo = lnk[t, b, s]
        met[M_ACC] += 1
        if bo >= 0 and g[G_RANK, blk_node(st, slot, bo)] <= ra:
            set_link(st, t, b, e, bo)
            set_link(st, t, b, s, first_in_run(st, slot, a, ra, rs, not right, False, False))
        elif bo >= 0:
            set_link(st, t, b, e, first_in_run(st, slot, a, rp, ra, not right, True, False))
        else:
            set_link(st, t, b, e, -1)
        trs[t, T_SUCC] = e
        out[0] = OP_INSERT
        out[2] = p
        out[3] = s
    elif k == KIND_DELETE and st[I_ACT][t, e] == 1:
        if x0 != e:
            return ANS_POISON
        s = lst[t, L_NXT, e]
        p = lst[t, L_PRV, e]
        hit = first_in_run(st, slot, a, er[p], er[e], right, True, True)
        new_f = closer(a, hit, lnk[t, f, s], ln, right)
        new_b = closer(a, lnk[t, b, e], lnk[t, b, s], ln, not right)
        set_link(st, t, f, e, -1)
        set_link(st, t, b, e, -1)
        list_remove(st, t, e)
        set_link(st, t, f, s, new_f)
        set_link(st, t, b, s, new_b)
        trs[t, T_SUCC] = s
        out[0] = OP_DELETE
        out[2] = p
        out[3] = s
    else:
        p = lst[t, L_PRV, x0]
        met[M_ACC] += 1
        set_link(st, t, f, x0, first_in_run(st, slot, a, er[p], er[x0], right, True, x0 == e))
        trs[t, T_SUCC] = x0
        if k == KIND_QUERY:
            ans = ANS_INF if x0 == inf else x0
    trs[t, T_POS] = a
    return ans


# ---------------------------------------------------------------- blocks


@kernel
def build_work(st, slot, budget):
    """Advance the build of ``slot`` by at most ``budget`` ops; returns ops used.

    First a sweep over all cycle ranks fills the sorted order and the
    boundary table, then the strip structure is built task by task.
    """
    blk = st[I_BLK]
    g = st[I_G]
    n = st[I_PRM][P_N]
    used = 0
    if blk[slot, B_STATUS] == BS_SWEEP:
        succ = st[I_SUCC]
        srt = st[I_SORT]
        srank = st[I_SRANK]
        ln = blk[slot, B_LEN]
        while blk[slot, B_CUR] < n and used + 1 <= budget:
            q = blk[slot, B_CUR]
            cnt = blk[slot, B_CNT]
            succ[slot, q] = cnt
            lp = blk_pos(st, slot, g[G_RNODE, q])
            if lp >= 0:
                srt[slot, 0, cnt] = lp
                srt[slot, 1, lp] = cnt
                srank[slot, lp] = cnt + 1
                blk[slot, B_CNT] = cnt + 1
            blk[slot, B_CUR] = q + 1
            used += 1
        if blk[slot, B_CUR] == n:
            succ[slot, n] = blk[slot, B_CNT]
            srank[slot, ln] = 0
            srank[slot, ln + 1] = ln + 1
            st[I_BST][slot, :] = 0
            blk[slot, B_STATUS] = BS_STRIP
    if blk[slot, B_STATUS] == BS_STRIP and used < budget:
        li = blk[slot, B_LAY]
        info = st[I_LI]
        nodes = st[I_LN][li, : info[li, LI_NN]]
        tasks = st[I_LT][li, : info[li, LI_NT]]
        ln = blk[slot, B_LEN]
        used += build_step(
            nodes, tasks, st[I_PTS][slot], st[I_MEM][slot], st[I_SRT][slot], st[I_LINKS][slot],
            st[I_BASE][slot], st[I_SRANK][slot, : ln + 2], st[I_SCR][slot], info[li, LI_GMAX],
            st[I_BST][slot], budget - used,
        )
        if st[I_BST][slot, S_TASK] == info[li, LI_NT]:
            blk[slot, B_STATUS] = BS_READY
            st[I_MET][M_BUILDS] += 1
    st[I_MET][M_ACC] += used
    return used


@kernel
def slot_protected(st, slot):
    trs = st[I_TRS]
    for t in range(st[I_PRM][P_T]):
        if trs[t, T_STATUS] == ST_VALID and trs[t, T_SLOT] == slot:
            return True
        if trs[t, T_STATUS] >= ST_CLEAR and trs[t, T_JSLOT] == slot:
            return True
    return False


@kernel
def free_slot(st, slot):
    blk = st[I_BLK]
    if blk[slot, B_STATUS] != BS_FREE:
        st[I_PSLOT][blk[slot, B_TRACK], blk[slot, B_PATH]] = -1
        blk[slot, B_STATUS] = BS_FREE


@kernel
def ensure_slot(st, t, k):
    """Slot holding path ``k`` of track ``t``, starting its build if needed."""
    pslot = st[I_PSLOT]
    if pslot[t, k] >= 0:
        return pslot[t, k]
    blk = st[I_BLK]
    trs = st[I_TRS]
    ns = st[I_PRM][P_S]
    pick = -1
    for sl in range(ns):
        if blk[sl, B_STATUS] == BS_FREE:
            pick = sl
            break
    if pick < 0:
        far = -1
        for sl in range(ns):
            if slot_protected(st, sl):
                continue
            d = path_gap(st, blk[sl, B_PATH], trs[blk[sl, B_TRACK], T_HOME])
            if d > far:
                far = d
                pick = sl
        if pick < 0:
            return -1
        free_slot(st, pick)
    blk[pick, B_STATUS] = BS_SWEEP
    blk[pick, B_PATH] = k
    blk[pick, B_TRACK] = t
    blk[pick, B_START] = path_start(st, t, k)
    ln = path_len(st, k)
    blk[pick, B_LEN] = ln
    blk[pick, B_LAY] = 0 if ln == st[I_PRM][P_L] else 1
    blk[pick, B_CUR] = 0
    blk[pick, B_CNT] = 0
    pslot[t, k] = pick
    return pick


@kernel
def evict_far(st, t):
    blk = st[I_BLK]
    home = st[I_TRS][t, T_HOME]
    for sl in range(st[I_PRM][P_S]):
        if blk[sl, B_STATUS] != BS_FREE and blk[sl, B_TRACK] == t:
            if path_gap(st, blk[sl, B_PATH], home) > 3 and not slot_protected(st, sl):
                free_slot(st, sl)


@kernel
def build_sync(st, slot):
    while st[I_BLK][slot, B_STATUS] != BS_READY:
        build_work(st, slot, 2**40)


# ---------------------------------------------------------------- track jobs


@kernel
def log_push(st, t, node, op, e, p, s):
    """Append an event; returns False when the log is full."""
    trs = st[I_TRS]
    cap = st[I_PRM][P_LOGCAP]
    cnt = trs[t, T_LCOUNT]
    if cnt >= cap:
        return False
    r = (trs[t, T_LHEAD] + cnt) % cap
    lg = st[I_LOG]
    lg[t, r, LG_NODE] = node
    lg[t, r, LG_OP] = op
    lg[t, r, LG_E] = e
    lg[t, r, LG_P] = p
    lg[t, r, LG_S] = s
    trs[t, T_LCOUNT] = cnt + 1
    met = st[I_MET]
    met[M_ACC] += 1
    if cnt + 1 > met[M_LOG_MAX]:
        met[M_LOG_MAX] = cnt + 1
    return True


@inline_kernel
def log_pop(st, t):
    trs = st[I_TRS]
    trs[t, T_LHEAD] = (trs[t, T_LHEAD] + 1) % st[I_PRM][P_LOGCAP]
    trs[t, T_LCOUNT] -= 1


@kernel
def job_target(st, t):
    """Slot the job of track ``t`` should merge into, or -1 if not ready."""
    trs = st[I_TRS]
    k = path_of(st, t, trs[t, T_NODE])
    sl = st[I_PSLOT][t, k]
    if sl < 0 or st[I_BLK][sl, B_STATUS] != BS_READY:
        return -1
    return sl


@kernel
def job_need(st, t):
    """Path a waiting job needs built, or -1."""
    trs = st[I_TRS]
    if trs[t, T_STATUS] != ST_CATCHUP or trs[t, T_LCOUNT] > 0:
        return -1
    if trs[t, T_VIRT] != NO_VIRT:
        return -1
    return path_of(st, t, trs[t, T_NODE])


@kernel
def start_clear(st, t, slot, pos0):
    trs = st[I_TRS]
    trs[t, T_STATUS] = ST_CLEAR
    trs[t, T_JSLOT] = slot
    trs[t, T_JPOS0] = pos0
    trs[t, T_JIDX] = 0


@kernel
def job_work(st, t, budget):
    """Advance the setup job of track ``t`` within ``budget`` ops."""
    trs = st[I_TRS]
    met = st[I_MET]
    lst = st[I_LST]
    lg = st[I_LOG]
    g = st[I_G]
    er = st[I_ER]
    e_cnt = st[I_PRM][P_E]
    maxstep = st[I_PRM][P_MAXSTEP]
    acc0 = met[M_ACC]
    while trs[t, T_STATUS] != ST_VALID:
        used = met[M_ACC] - acc0
        status = trs[t, T_STATUS]
        if status == ST_CATCHUP:
            if trs[t, T_LCOUNT] == 0:
                sl = job_target(st, t)
                if sl < 0:
                    break
                start_clear(st, t, sl, blk_pos(st, sl, trs[t, T_NODE]))
                continue
            if used + 6 > budget:
                break
            r = trs[t, T_LHEAD]
            op = lg[t, r, LG_OP]
            if op == OP_INSERT:
                list_insert(st, t, lg[t, r, LG_E], lg[t, r, LG_P], lg[t, r, LG_S])
            elif op == OP_DELETE:
                list_remove(st, t, lg[t, r, LG_E])
            trs[t, T_NODE] = lg[t, r, LG_NODE]
            met[M_ACC] += 1
            log_pop(st, t)
        elif status == ST_CLEAR:
            ncap = st[I_AT].shape[2]
            if used + 5 > budget:
                break
            i = trs[t, T_JIDX]
            if i < e_cnt + 2:
                st[I_LNK][t, 0, i] = -1
                st[I_LNK][t, 1, i] = -1
            else:
                st[I_AT][t, 0, i - e_cnt - 2] = -1
                st[I_AT][t, 1, i - e_cnt - 2] = -1
            met[M_ACC] += 2
            trs[t, T_JIDX] = i + 1
            if i + 1 == e_cnt + 2 + ncap:
                trs[t, T_STATUS] = ST_MERGE
                trs[t, T_JIDX] = 0
                trs[t, T_JX] = lst[t, L_NXT, e_cnt]
                trs[t, T_JF] = -1
                trs[t, T_JB] = -1
        elif status == ST_MERGE:
            if used + 6 > budget:
                break
            sl = trs[t, T_JSLOT]
            ln = st[I_BLK][sl, B_LEN]
            pos0 = trs[t, T_JPOS0]
            wrap = st[I_PRM][P_WRAP] == 1
            i = trs[t, T_JIDX]
            x = trs[t, T_JX]
            pos = st[I_SORT][sl, 0, i] if i < ln else -1
            met[M_ACC] += 1
            if i == ln or er[x] < g[G_RANK, blk_node(st, sl, pos)]:
                # close the run of x
                if trs[t, T_JF] >= 0:
                    set_link(st, t, 0, x, trs[t, T_JF])
                if trs[t, T_JB] >= 0:
                    set_link(st, t, 1, x, trs[t, T_JB])
                trs[t, T_JF] = -1
                trs[t, T_JB] = -1
                if i == ln:
                    trs[t, T_SLOT] = sl
                    trs[t, T_POS] = pos0
                    trs[t, T_STATUS] = ST_REPLAY
                    met[M_MERGES] += 1
                else:
                    trs[t, T_JX] = lst[t, L_NXT, x]
                continue
            if wrap:
                trs[t, T_JF] = closer(pos0, trs[t, T_JF], pos, ln, True)
                trs[t, T_JB] = closer(pos0, trs[t, T_JB], pos, ln, False)
                if pos == pos0:
                    trs[t, T_SUCC] = x
            elif pos > pos0:
                if trs[t, T_JF] < 0 or pos < trs[t, T_JF]:
                    trs[t, T_JF] = pos
            elif pos < pos0:
                if pos > trs[t, T_JB]:
                    trs[t, T_JB] = pos
            else:
                trs[t, T_SUCC] = x
            trs[t, T_JIDX] = i + 1
            met[M_ACC] += 2
        else:  # replay
            if trs[t, T_LCOUNT] == 0:
                trs[t, T_STATUS] = ST_VALID
                trs[t, T_VIRT] = NO_VIRT
                break
            if used + maxstep > budget:
                break
            r = trs[t, T_LHEAD]
            node = lg[t, r, LG_NODE]
            sl = trs[t, T_SLOT]
            lp = blk_pos(st, sl, node)
            met[M_ACC] += 1
            if lp < 0:
                trs[t, T_STATUS] = ST_CATCHUP
                trs[t, T_VIRT] = NO_VIRT
                continue
            right = lp == trs[t, T_POS] + 1
            ans = track_step(st, t, lp, right)
            if ans == ANS_POISON:
                met[M_POISON] += 1
                trs[t, T_STATUS] = ST_CATCHUP
                trs[t, T_LCOUNT] = 0
                break
            out = st[I_OUT]
            if out[0] != lg[t, r, LG_OP] or (out[0] != OP_NONE and out[1] != lg[t, r, LG_E]):
                met[M_MISMATCH] += 1
            trs[t, T_NODE] = node
            log_pop(st, t)
    return met[M_ACC] - acc0


@kernel
def job_sync(st, t):
    """Finish the job of track ``t`` now, building blocks synchronously."""
    trs = st[I_TRS]
    while trs[t, T_STATUS] != ST_VALID:
        job_work(st, t, 2**40)
        if trs[t, T_STATUS] == ST_CATCHUP and trs[t, T_LCOUNT] == 0:
            k = path_of(st, t, trs[t, T_NODE])
            sl = ensure_slot(st, t, k)
            build_sync(st, sl)


@kernel
def enter_virtual(st, t, g, right):
    """Rebuild links of a valid track for the block of ``g`` as seen from just
    outside it, so that ``g`` can be served by an ordinary step."""
    k = path_of(st, t, g)
    sl = ensure_slot(st, t, k)
    build_sync(st, sl)
    pos0 = -1 if right else st[I_BLK][sl, B_LEN]
    trs = st[I_TRS]
    trs[t, T_VIRT] = pos0
    trs[t, T_LCOUNT] = 0
    start_clear(st, t, sl, pos0)
    job_work(st, t, 2**40)


# ---------------------------------------------------------------- foreground


@kernel
def serve(st, t, g, right):
    trs = st[I_TRS]
    met = st[I_MET]
    acc0 = met[M_ACC]
    met[M_RQACC] = 0
    ans = track_step(st, t, blk_pos(st, trs[t, T_SLOT], g), right)
    ops = met[M_ACC] - acc0
    if ops > met[M_STEPOPS_MAX]:
        met[M_STEPOPS_MAX] = ops
    rq = met[M_RQACC]
    met[M_RQ_SUM] += rq
    met[M_TSTEPS] += 1
    if rq > met[M_RQ_MAX]:
        met[M_RQ_MAX] = rq
    met[M_RQ0 + min(rq, 3)] += 1
    trs[t, T_NODE] = g
    return ans


@kernel
def feed(st, t, g, right, op, e, p, s):
    """Hand a step already served elsewhere to track ``t``.

    Returns the answer when the track could execute it, else ``ANS_NONE``.
    Sets ``st[I_OUT][4]`` to 1 when the track executed the step.
    """
    trs = st[I_TRS]
    out = st[I_OUT]
    out[4] = 0
    if trs[t, T_STATUS] != ST_VALID:
        if log_push(st, t, g, op, e, p, s):
            return ANS_NONE
        st[I_MET][M_FORCED] += 1
        job_sync(st, t)
    if blk_pos(st, trs[t, T_SLOT], g) >= 0:
        a = serve(st, t, g, right)
        out[4] = 1
        return a
    trs[t, T_STATUS] = ST_CATCHUP
    trs[t, T_LCOUNT] = 0
    trs[t, T_LHEAD] = 0
    log_push(st, t, g, op, e, p, s)
    return ANS_NONE


@kernel
def fg_step(st, right):
    prm = st[I_PRM]
    trs = st[I_TRS]
    met = st[I_MET]
    eng = st[I_ENG]
    out = st[I_OUT]
    n = prm[P_N]
    nt = prm[P_T]
    acc0 = met[M_ACC]
    g = eng[E_NODE] + 1 if right else eng[E_NODE] - 1
    if g == n:
        g = 0
    elif g < 0:
        g = n - 1
    eng[E_NODE] = g
    if prm[P_NP] > 1:
        for t in range(nt):
            k = path_of(st, t, g)
            if k != trs[t, T_HOME]:
                trs[t, T_HOME] = k
                eng[E_IDLE] = 0
                met[M_ENTRIES] += 1
                sl = st[I_PSLOT][t, k]
                if sl < 0 or st[I_BLK][sl, B_STATUS] != BS_READY:
                    if eng[E_STEADY] == 1:
                        met[M_NR_STEADY] += 1
                    else:
                        met[M_NR_WARM] += 1
                evict_far(st, t)
    served = -1
    ans = np.int64(ANS_NONE)
    for t in range(nt):
        if trs[t, T_STATUS] == ST_VALID and blk_pos(st, trs[t, T_SLOT], g) >= 0:
            ans = serve(st, t, g, right)
            served = t
            break
    if served < 0:
        met[M_FORCED] += 1
        served = 0
        for t in range(nt):
            if trs[t, T_STATUS] == ST_VALID:
                served = t
        if trs[served, T_STATUS] != ST_VALID:
            job_sync(st, served)
        if blk_pos(st, trs[served, T_SLOT], g) < 0:
            enter_virtual(st, served, g, right)
        ans = serve(st, served, g, right)
    if ans == ANS_POISON:
        met[M_POISON] += 1
        return ans
    op = out[0]
    e = out[1]
    p = out[2]
    s = out[3]
    for t in range(nt):
        if t == served:
            continue
        a2 = feed(st, t, g, right, op, e, p, s)
        if out[4] == 1 and (a2 != ans or out[0] != op):
            met[M_MISMATCH] += 1
    used = met[M_ACC] - acc0
    met[M_STEPS] += 1
    met[M_FG_SUM] += used
    if used > met[M_FG_MAX]:
        met[M_FG_MAX] = used
    return ans


# ---------------------------------------------------------------- background


@kernel
def window_ready(st, t):
    trs = st[I_TRS]
    if trs[t, T_STATUS] != ST_VALID:
        return False
    np_ = st[I_PRM][P_NP]
    for d in range(-1, 2):
        k = (trs[t, T_HOME] + d) % np_
        sl = st[I_PSLOT][t, k]
        if sl < 0 or st[I_BLK][sl, B_STATUS] != BS_READY:
            return False
    return True


@kernel
def background(st):
    """Spend at most the per-step budget on jobs and block builds."""
    prm = st[I_PRM]
    trs = st[I_TRS]
    met = st[I_MET]
    blk = st[I_BLK]
    nt = prm[P_T]
    np_ = prm[P_NP]
    budget = prm[P_BUDGET]
    eng = st[I_ENG]
    if eng[E_IDLE] == 1:
        return
    acc0 = met[M_ACC]
    progress = True
    while progress:
        progress = False
        for t in range(nt):
            rem = budget - (met[M_ACC] - acc0)
            k = job_need(st, t)
            if k >= 0:
                sl = ensure_slot(st, t, k)
                if sl >= 0 and blk[sl, B_STATUS] != BS_READY and build_work(st, sl, rem) > 0:
                    progress = True
            if trs[t, T_STATUS] != ST_VALID:
                before = trs[t, T_STATUS]
                rem = budget - (met[M_ACC] - acc0)
                if job_work(st, t, rem) > 0 or trs[t, T_STATUS] != before:
                    progress = True
        if progress:
            continue
        for t in range(nt):
            for d in (0, 1, -1, 2, -2):
                k = (trs[t, T_HOME] + d) % np_
                sl = ensure_slot(st, t, k)
                if sl < 0 or blk[sl, B_STATUS] == BS_READY:
                    continue
                rem = budget - (met[M_ACC] - acc0)
                if build_work(st, sl, rem) > 0:
                    progress = True
                    break
            if progress:
                break
    used = met[M_ACC] - acc0
    met[M_BG_SUM] += used
    if used > met[M_BG_MAX]:
        met[M_BG_MAX] = used
    if used > budget:
        met[M_BG_OVER] += 1
    if used == 0:
        idle = True
        for t in range(nt):
            if trs[t, T_STATUS] != ST_VALID:
                idle = False
        if idle:
            eng[E_IDLE] = 1
    if eng[E_STEADY] == 0:
        ok = True
        for t in range(nt):
            if not window_ready(st, t):
                ok = False
        if ok:
            eng[E_STEADY] = 1
            met[M_STEADY_AT] = eng[E_STEP] + 1


# ---------------------------------------------------------------- setup and driver


@kernel
def engine_init(st):
    """Reset tracks, apply the start node's label and set up every track."""
    prm = st[I_PRM]
    trs = st[I_TRS]
    g = st[I_G]
    e_cnt = prm[P_E]
    head = e_cnt
    inf = e_cnt + 1
    st[I_LST][:, :, :] = -1
    st[I_ACT][:, :] = 0
    st[I_LNK][:, :, :] = -1
    st[I_AT][:, :, :] = -1
    st[I_SHADOW][:] = 0
    st[I_PSLOT][:, :] = -1
    st[I_BLK][:, :] = 0
    st[I_ENG][:] = 0
    for t in range(prm[P_T]):
        trs[t, :] = 0
        st[I_LST][t, L_NXT, head] = inf
        st[I_LST][t, L_PRV, inf] = head
        st[I_ACT][t, inf] = 1
        trs[t, T_STATUS] = ST_CATCHUP
        trs[t, T_NODE] = 0
        trs[t, T_VIRT] = NO_VIRT
        trs[t, T_HOME] = path_of(st, t, 0)
        if g[G_KIND, 0] == KIND_INSERT:
            list_insert(st, t, g[G_ELEM, 0], head, inf)
    if g[G_KIND, 0] == KIND_INSERT:
        st[I_SHADOW][g[G_ELEM, 0]] = 1
    for t in range(prm[P_T]):
        job_sync(st, t)
    st[I_MET][:] = 0
    if g[G_KIND, 0] == KIND_QUERY:
        return ANS_INF
    return ANS_NONE


@kernel
def run_steps(st, dirs, ans, audit_every):
    """Execute one step per entry of ``dirs`` (1 = clockwise, 0 = counter)."""
    prm = st[I_PRM]
    met = st[I_MET]
    eng = st[I_ENG]
    g = st[I_G]
    shadow = st[I_SHADOW]
    for i in range(dirs.shape[0]):
        a = fg_step(st, dirs[i] == 1)
        ans[i] = a
        if a == ANS_POISON:
            return i + 1
        if prm[P_T] > 1:
            background(st)
        node = eng[E_NODE]
        if g[G_KIND, node] == KIND_INSERT:
            shadow[g[G_ELEM, node]] = 1
        elif g[G_KIND, node] == KIND_DELETE:
            shadow[g[G_ELEM, node]] = 0
        eng[E_STEP] += 1
        if audit_every > 0 and eng[E_STEP] % audit_every == 0:
            met[M_AUDITS] += 1
            code = audit(st)
            if code != 0:
                if met[M_AUDIT_FAIL] == 0:
                    met[M_AUDIT_FIRST] = eng[E_STEP] * 16 + code
                met[M_AUDIT_FAIL] += 1
    return dirs.shape[0]


# ---------------------------------------------------------------- audits and oracle


@kernel
def audit_track(st, t):
    """Check list order, membership and both link families of track ``t``.

    Returns 0 when consistent, otherwise a small error code. Uses no engine
    machinery beyond the block's sorted order.
    """
    prm = st[I_PRM]
    e_cnt = prm[P_E]
    head = e_cnt
    inf = e_cnt + 1
    trs = st[I_TRS]
    lst = st[I_LST]
    act = st[I_ACT]
    g = st[I_G]
    er = st[I_ER]
    shadow = st[I_SHADOW]
    if trs[t, T_STATUS] != ST_VALID:
        return 0  # a rebuilding track lags behind on purpose
    # list order and membership
    x = lst[t, L_NXT, head]
    prev = np.int64(-1)
    count = 0
    while x != inf:
        if x <= prev or x < 0 or x >= e_cnt or act[t, x] != 1 or shadow[x] != 1:
            return 1
        if lst[t, L_PRV, x] != (head if prev < 0 else prev):
            return 1
        prev = x
        count += 1
        x = lst[t, L_NXT, x]
    total = 0
    for y in range(e_cnt):
        total += shadow[y]
    if total != count:
        return 2
    sl = trs[t, T_SLOT]
    ln = st[I_BLK][sl, B_LEN]
    pos0 = trs[t, T_POS]
    wrap = prm[P_WRAP] == 1
    want_f = np.full(e_cnt + 2, -1, np.int64)
    want_b = np.full(e_cnt + 2, -1, np.int64)
    x = lst[t, L_NXT, head]
    for i in range(ln):
        pos = st[I_SORT][sl, 0, i]
        r = g[G_RANK, blk_node(st, sl, pos)]
        while er[x] < r:
            x = lst[t, L_NXT, x]
        if wrap:
            want_f[x] = closer(pos0, want_f[x], pos, ln, True)
            want_b[x] = closer(pos0, want_b[x], pos, ln, False)
        elif pos > pos0:
            if want_f[x] < 0 or pos < want_f[x]:
                want_f[x] = pos
        elif pos < pos0:
            if pos > want_b[x]:
                want_b[x] = pos
        if pos == pos0 and trs[t, T_SUCC] != x:
            return 6
    at = st[I_AT]
    lnk = st[I_LNK]
    for y in range(e_cnt + 2):
        if y == head:
            continue
        if lnk[t, 0, y] != want_f[y]:
            return 3
        if lnk[t, 1, y] != want_b[y]:
            return 4
        for fam in range(2):
            q = lnk[t, fam, y]
            if q >= 0 and at[t, fam, q] != y:
                return 5
    return 0


@kernel
def audit(st):
    for t in range(st[I_PRM][P_T]):
        code = audit_track(st, t)
        if code != 0:
            return code
    return 0


@kernel
def oracle_replay(kind, elem, nodes, n_elem):
    """Naive successor answers for a node sequence (Fenwick tree over ids)."""
    tree = np.zeros(n_elem + 1, np.int64)
    act = np.zeros(n_elem, np.int64)
    out = np.full(nodes.shape[0], ANS_NONE, np.int64)
    top = 1
    while top * 2 <= n_elem:
        top *= 2
    for i in range(nodes.shape[0]):
        v = nodes[i]
        k = kind[v]
        e = elem[v]
        delta = 0
        if k == KIND_INSERT and act[e] == 0:
            delta = 1
        elif k == KIND_DELETE and act[e] == 1:
            delta = -1
        if delta != 0:
            act[e] += delta
            j = e + 1
            while j <= n_elem:
                tree[j] += delta
                j += j & -j
        elif k == KIND_QUERY:
            below = 0
            j = e
            while j > 0:
                below += tree[j]
                j -= j & -j
            total = 0
            j = n_elem
            while j > 0:
                total += tree[j]
                j -= j & -j
            if below == total:
                out[i] = ANS_INF
            else:
                want = below + 1
                pos = 0
                step = top
                while step > 0:
                    if pos + step <= n_elem and tree[pos + step] < want:
                        pos += step
                        want -= tree[pos]
                    step //= 2
                out[i] = pos
    return out
