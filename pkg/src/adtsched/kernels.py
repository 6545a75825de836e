"""Array kernels for depth, level and slot-by-slot list scheduling.

Graphs are passed as CSR arrays over node indices in topological order
(index 0 is the root, parents precede children). The kernels are compiled
with numba unless ``ADTSCHED_NO_NUMBA=1`` is set, in which case the same
code runs as plain Python.
"""

from __future__ import annotations

import os

import numpy as np

USE_NUMBA = os.environ.get("ADTSCHED_NO_NUMBA", "").lower() not in ("1", "true", "yes")

if USE_NUMBA:
    import numba

    def _kernel(fn):
        return numba.njit(cache=True, nogil=True)(fn)
else:
    def _kernel(fn):
        return fn


@_kernel
def depth_kernel(is_seq, is_or, child_ptr, child_idx):
    n = is_seq.shape[0]
    depth = np.zeros(n, np.int64)
    for v in range(n - 1, -1, -1):
        best = -1
        for j in range(child_ptr[v], child_ptr[v + 1]):
            d = depth[child_idx[j]]
            if best < 0:
                best = d
            elif is_or[v]:
                best = min(best, d)
            else:
                best = max(best, d)
        if best < 0:
            best = 0
        depth[v] = best + is_seq[v]
    return depth


@_kernel
def level_kernel(is_seq, child_ptr, child_idx):
    n = is_seq.shape[0]
    level = np.zeros(n, np.int64)
    for v in range(n):
        here = level[v] + is_seq[v]
        for j in range(child_ptr[v], child_ptr[v + 1]):
            c = child_idx[j]
            if here > level[c]:
                level[c] = here
    return level


@_kernel
def reshuffle_kernel(grid, agent, seq_parent):
    """Move each node in this slot onto its Seq parent's agent, swapping with
    whoever holds that agent. ``grid[a]`` is the node on agent a (or -1)."""
    m = grid.shape[0] - 1
    for a in range(1, m + 1):
        cur = grid[a]
        if cur < 0:
            continue
        p = seq_parent[cur]
        if p < 0:
            continue
        pa = agent[p]
        if pa == 0 or pa == a:
            continue
        other = grid[pa]
        grid[pa] = cur
        agent[cur] = pa
        grid[a] = other
        if other >= 0:
            agent[other] = a


@_kernel
def label_kernel(sel, n_sel, grid, agent, owner, seq_parent, seq_child):
    """Give this slot's selected nodes agent numbers. A node continuing a unit
    chain takes the agent that ran the chain's previous unit; other nodes
    prefer agents whose last chain is finished rather than paused."""
    m = grid.shape[0] - 1
    grid[:] = -1
    free = np.empty(n_sel, np.int64)
    n_free = 0
    for k in range(n_sel):
        v = sel[k]
        p = seq_parent[v]
        if p >= 0 and agent[p] != 0 and grid[agent[p]] < 0:
            grid[agent[p]] = v
            agent[v] = agent[p]
        else:
            free[n_free] = v
            n_free += 1
    for k in range(n_free):
        v = free[k]
        pick = -1
        fallback = -1
        for a in range(1, m + 1):
            if grid[a] >= 0:
                continue
            if fallback < 0:
                fallback = a
            o = owner[a]
            if o < 0 or seq_child[o] < 0 or agent[seq_child[o]] != 0:
                pick = a
                break
        if pick < 0:
            pick = fallback
        grid[pick] = v
        agent[v] = pick
    for a in range(1, m + 1):
        if grid[a] >= 0:
            owner[a] = grid[a]


@_kernel
def schedule_kernel(slots, m, depth, rank, lvl_ptr, lvl_idx, anc_ptr, anc_idx, seq_parent, seq_child):
    """Assign Seq nodes to (agent, slot), slot counting down from ``slots``.

    Returns (n_remain, agent, slot); n_remain == 0 means every Seq node fit.
    """
    n = depth.shape[0]
    agent = np.zeros(n, np.int64)
    slot_of = np.zeros(n, np.int64)
    n_levels = lvl_ptr.shape[0] - 1
    n_remain = lvl_ptr[n_levels]
    pending = np.empty(n_remain, np.int64)
    keys = np.empty(n_remain, np.int64)
    n_pend = 0
    grid = np.full(m + 1, -1, np.int64)
    owner = np.full(m + 1, -1, np.int64)
    sel = np.empty(n_remain, np.int64)
    slot = slots
    lvl = 0
    while n_remain > 0 and slot > 0:
        if lvl < n_levels:
            for j in range(lvl_ptr[lvl], lvl_ptr[lvl + 1]):
                pending[n_pend] = lvl_idx[j]
                n_pend += 1
            lvl += 1
        for i in range(n_pend):
            if depth[pending[i]] > slot:
                return n_remain, agent, slot_of
        for i in range(n_pend):
            keys[i] = -depth[pending[i]] * (n + 1) + rank[pending[i]]
        order = np.argsort(keys[:n_pend])
        used = 0
        keep = 0
        carried = np.empty(n_pend, np.int64)
        for k in range(n_pend):
            v = pending[order[k]]
            ok = used < m
            if ok:
                for j in range(anc_ptr[v], anc_ptr[v + 1]):
                    a = anc_idx[j]
                    if slot_of[a] == 0 or slot_of[a] == slot:
                        ok = False
                        break
            if ok:
                sel[used] = v
                used += 1
                slot_of[v] = slot
            else:
                carried[keep] = v
                keep += 1
        for k in range(keep):
            pending[k] = carried[k]
        n_pend = keep
        label_kernel(sel, used, grid, agent, owner, seq_parent, seq_child)
        reshuffle_kernel(grid, agent, seq_parent)
        n_remain -= used
        slot -= 1
    return n_remain, agent, slot_of
