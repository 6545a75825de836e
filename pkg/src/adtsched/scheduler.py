"""Minimal-agent scheduling of unit-time DAG variants.

Slots are numbered from ``slots`` (the last unit of work, next to the root)
down to 1 (the first unit of work, at the leaves). Scheduling walks the
slots backwards, level by level from the root, and bisects on the number of
agents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .preprocess import MINIMAL, Dag, DagNodeKind, Target, Variant


class UnassignedRemainder(RuntimeError):
    pass


@dataclass(frozen=True)
class Bounds:
    slots: int
    low: int  # exclusive
    up: int


@dataclass
class Schedule:
    variant: Variant
    slots: int = 0
    agents_used: int = 0
    unit: int = 1
    # node id -> (agent, slot); both 1-based
    assignment: dict[str, tuple[int, int]] = field(default_factory=dict)
    bounds: Bounds | None = None
    # prepared graph carrying depth/level/agent/slot annotations
    dag: Dag | None = None

    @property
    def no_attack(self) -> bool:
        return self.variant.dag is None

    @property
    def makespan(self) -> int:
        return self.slots * self.unit


# ----------------------------------------------------------- array packing

class _Packed:
    """Dag as CSR arrays indexed by topological position."""

    def __init__(self, dag: Dag):
        self.dag = dag
        self.ids = dag.topological_order()
        self.index = {nid: i for i, nid in enumerate(self.ids)}
        n = len(self.ids)
        nodes = dag.nodes
        self.is_seq = np.array([nodes[v].kind is DagNodeKind.SEQ for v in self.ids], np.int64)
        self.is_or = np.array([nodes[v].kind is DagNodeKind.OR_JOIN for v in self.ids], np.int64)
        self.child_ptr, self.child_idx = _csr([[self.index[c] for c in dag.children[v]] for v in self.ids])
        by_name = sorted(range(n), key=lambda i: self.ids[i])
        self.rank = np.empty(n, np.int64)
        self.rank[by_name] = np.arange(n)

        parents: list[list[int]] = [[] for _ in range(n)]
        for v in range(n):
            for j in range(self.child_ptr[v], self.child_ptr[v + 1]):
                parents[self.child_idx[j]].append(v)
        self.parents = parents
        # nearest Seq ancestors, parents first
        anc: list[frozenset[int]] = []
        for v in range(n):
            s: set[int] = set()
            for p in parents[v]:
                if self.is_seq[p]:
                    s.add(p)
                else:
                    s |= anc[p]
            anc.append(frozenset(s))
        self.anc = anc
        self.anc_ptr, self.anc_idx = _csr([sorted(a) for a in anc])
        self.seq_parent = np.array(
            [parents[v][0] if len(parents[v]) == 1 and self.is_seq[parents[v][0]] else -1
             for v in range(n)], np.int64)
        # the unit below a Seq node in its own chain, if any
        self.seq_child = np.array(
            [self.child_idx[self.child_ptr[v]]
             if self.is_seq[v] and self.child_ptr[v + 1] - self.child_ptr[v] == 1
             and self.is_seq[self.child_idx[self.child_ptr[v]]] else -1
             for v in range(n)], np.int64)


def _csr(rows):
    ptr = np.zeros(len(rows) + 1, np.int64)
    ptr[1:] = np.cumsum([len(r) for r in rows])
    idx = np.array([x for r in rows for x in r], np.int64)
    return ptr, idx


# -------------------------------------------------------- depth and level

def compute_depth(dag: Dag) -> Dag:
    """Set ``depth`` on every node and clear ``keep`` on OR branches that are
    not the shortest."""
    pk = _Packed(dag)
    depth = kernels.depth_kernel(pk.is_seq, pk.is_or, pk.child_ptr, pk.child_idx)
    for i, nid in enumerate(pk.ids):
        dag.nodes[nid].depth = int(depth[i])
    # keep flags: walk down from the root following only minimal OR branches
    for node in dag.nodes.values():
        node.keep = False
    stack = [dag.root]
    while stack:
        nid = stack.pop()
        node = dag.nodes[nid]
        if node.keep:
            continue
        node.keep = True
        kids = dag.children[nid]
        if node.kind is DagNodeKind.OR_JOIN and kids:
            best = min(kids, key=lambda c: (dag.nodes[c].depth, c))
            kids = [best]
        stack.extend(kids)
    return dag


def prune_unkept(dag: Dag) -> Dag:
    for nid in [k for k, v in dag.nodes.items() if not v.keep]:
        del dag.nodes[nid]
        del dag.children[nid]
    for nid in dag.children:
        dag.children[nid] = [c for c in dag.children[nid] if c in dag.nodes]
    return dag


def compute_level(dag: Dag) -> Dag:
    pk = _Packed(dag)
    level = kernels.level_kernel(pk.is_seq, pk.child_ptr, pk.child_idx)
    for i, nid in enumerate(pk.ids):
        dag.nodes[nid].level = int(level[i])
    return dag


def bounds(dag: Dag, target: Target = MINIMAL) -> Bounds:
    slots = dag.nodes[dag.root].depth
    if not isinstance(target, type(MINIMAL)):
        slots = max(int(target), slots)
    widths: dict[int, int] = {}
    for v in dag.nodes.values():
        if v.kind is DagNodeKind.SEQ:
            widths[v.level] = widths.get(v.level, 0) + 1
    n = dag.n
    low = math.ceil(n / slots) - 1 if slots else 0
    return Bounds(slots, low, max(widths.values(), default=0))


# -------------------------------------------------------------- scheduling

def _level_csr(pk: _Packed, dag: Dag):
    rows: dict[int, list[int]] = {}
    for i, nid in enumerate(pk.ids):
        if pk.is_seq[i]:
            rows.setdefault(dag.nodes[nid].level, []).append(i)
    top = max(rows, default=-1)
    return _csr([rows.get(lv, []) for lv in range(top + 1)])


def _run(pk: _Packed, slots: int, agents: int):
    dag = pk.dag
    depth = np.array([dag.nodes[v].depth for v in pk.ids], np.int64)
    lvl_ptr, lvl_idx = _level_csr(pk, dag)
    return kernels.schedule_kernel(slots, agents, depth, pk.rank, lvl_ptr, lvl_idx,
                                   pk.anc_ptr, pk.anc_idx, pk.seq_parent, pk.seq_child)


def schedule(dag: Dag, slots: int, agents: int) -> tuple[dict[str, tuple[int, int]], int]:
    """One list-scheduling pass with a fixed number of agents.

    Returns (assignment of Seq nodes, n_remain); the assignment is empty
    unless n_remain == 0.
    """
    pk = _Packed(dag)
    n_remain, agent, slot = _run(pk, slots, agents)
    if n_remain:
        return {}, int(n_remain)
    return {pk.ids[i]: (int(agent[i]), int(slot[i])) for i in range(len(pk.ids)) if pk.is_seq[i]}, 0


def reshuffle_slot(dag: Dag, assignment: dict[str, tuple[int, int]], slot: int, num_agents: int) -> dict[str, tuple[int, int]]:
    """Permute agents within one slot so nodes follow their Seq parent's agent."""
    pk = _Packed(dag)
    agent = np.zeros(len(pk.ids), np.int64)
    grid = np.full(num_agents + 1, -1, np.int64)
    for nid, (a, s) in assignment.items():
        agent[pk.index[nid]] = a
        if s == slot:
            grid[a] = pk.index[nid]
    kernels.reshuffle_kernel(grid, agent, pk.seq_parent)
    out = dict(assignment)
    for a in range(1, num_agents + 1):
        if grid[a] >= 0:
            out[pk.ids[grid[a]]] = (a, slot)
    return out


def zero_assign(dag: Dag, assignment: dict[str, tuple[int, int]]) -> dict[str, tuple[int, int]]:
    """Give every zero-duration node the (agent, slot) of an adjacent node."""
    out = dict(assignment)
    nodes = dag.nodes
    parents = dag.parents()
    todo = [nid for nid, v in nodes.items() if v.kind is not DagNodeKind.SEQ]
    rest = []
    for nid in todo:
        seq_ps = [p for p in parents[nid] if nodes[p].kind is DagNodeKind.SEQ and p in out]
        if seq_ps:
            out[nid] = out[min(seq_ps, key=lambda p: (out[p][1], p))]
        else:
            rest.append(nid)

    def by_slot(ids, pick):
        return out[pick(ids, key=lambda x: (out[x][1], x))]

    while rest:
        left = []
        for nid in rest:
            v = nodes[nid]
            kids = dag.children[nid]
            done_kids = [c for c in kids if c in out]
            done_ps = [p for p in parents[nid] if p in out]
            pair = None
            if v.kind is DagNodeKind.AND_JOIN:
                if v.depth == 0:
                    if done_ps:
                        pair = by_slot(done_ps, min)
                elif all(c in out or nodes[c].depth == 0 for c in kids) and done_kids:
                    # the child finishing last in wall-clock time
                    pair = by_slot(done_kids, max)
            elif done_kids:
                pair = by_slot(done_kids, max)
            elif (not kids or all(nodes[c].depth == 0 for c in kids)) and done_ps:
                pair = by_slot(done_ps, min)
            if pair is None:
                left.append(nid)
            else:
                out[nid] = pair
        if len(left) == len(rest):
            raise UnassignedRemainder(f"cannot place zero-duration nodes: {', '.join(sorted(left))}")
        rest = left
    return out


def _shift(assignment: dict[str, tuple[int, int]]) -> tuple[dict[str, tuple[int, int]], int]:
    """Renumber slots so the earliest one is 1; returns (assignment, slot count)."""
    if not assignment:
        return assignment, 0
    lo = min(s for _, s in assignment.values())
    hi = max(s for _, s in assignment.values())
    return {k: (a, s - lo + 1) for k, (a, s) in assignment.items()}, hi - lo + 1


def prepare(dag: Dag) -> Dag:
    """Copy of ``dag`` with depth, keep-pruning and level applied."""
    dag = dag.copy()
    compute_depth(dag)
    prune_unkept(dag)
    compute_level(dag)
    return dag


def schedule_variant(variant: Variant, target: Target = MINIMAL) -> Schedule:
    if variant.dag is None:
        return Schedule(variant)
    dag = prepare(variant.dag)
    b = bounds(dag, target)
    if dag.n == 0:
        return Schedule(variant, 0, 0, dag.unit, {}, b, dag)
    pk = _Packed(dag)
    low, up = b.low, b.up
    best = None
    while up - low > 1:
        mid = low + (up - low) // 2
        n_remain, agent, slot = _run(pk, b.slots, mid)
        if n_remain == 0:
            up = mid
            best = (agent, slot)
        else:
            low = mid
    if best is None:
        n_remain, agent, slot = _run(pk, b.slots, up)
        if n_remain:
            raise RuntimeError(f"schedule failed with {up} agents")
        best = (agent, slot)
    agent, slot = best
    seq = {pk.ids[i]: (int(agent[i]), int(slot[i])) for i in range(len(pk.ids)) if pk.is_seq[i]}
    full = zero_assign(dag, seq)
    full, slots = _shift(full)
    for nid, (a, s) in full.items():
        dag.nodes[nid].agent, dag.nodes[nid].slot = a, s
    used = max(a for a, _ in full.values())
    return Schedule(variant, slots, used, dag.unit, full, b, dag)


def min_schedule(variants: list[Variant], target: Target = MINIMAL) -> list[Schedule]:
    return [schedule_variant(v, target) for v in variants]
