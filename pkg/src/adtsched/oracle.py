"""Independent ground truth by exhaustive search.

``enumerate_outcomes`` evaluates the tree directly with gate rules (no DAG
involved). ``brute_force_min_agents`` searches every slot-by-slot selection
of ready unit tasks for the smallest feasible team. Neither reuses the
scheduler's code paths.
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass, field
from functools import lru_cache

from .model import Adt, GateKind
from .preprocess import MINIMAL, Dag, DagNodeKind, preprocess, scenario_labels
from .scheduler import min_schedule


class OracleTimeout(RuntimeError):
    def __init__(self, budget: int):
        self.budget = budget
        super().__init__(f"search exceeded {budget} expansions")


class Infeasible(ValueError):
    pass


class _NoAttack:
    def __repr__(self):
        return "NoAttack"


NO_ATTACK = _NoAttack()


@dataclass(frozen=True)
class Outcome:
    succeed: bool
    acctime: int = 0
    agents_upper: int = 0
    acccost: int = 0
    attacks_used: frozenset[str] = frozenset()
    defences_active: frozenset[str] = frozenset()
    or_choices: tuple[tuple[str, str], ...] = ()

    @property
    def status(self) -> str:
        return "Succeed" if self.succeed else "Fail"


@dataclass(frozen=True)
class _Val:
    ok: bool
    time: int = 0
    cost: int = 0
    agents: int = 0
    used: frozenset[str] = frozenset()
    choices: tuple[tuple[str, str], ...] = ()


def _operating(adt: Adt, active: frozenset[str]):
    @lru_cache(maxsize=None)
    def op(nid: str) -> bool:
        node = adt.nodes[nid]
        if node.kind is GateKind.LEAF:
            return nid in active
        vals = [op(c) for c in node.children]
        return any(vals) if node.kind is GateKind.OR else all(vals)
    return op


def _staffed(gate_time: int, agents: int) -> int:
    # a gate with its own duration keeps someone busy even if nothing below does
    return max(agents, 1) if gate_time else agents


def _evaluate(adt: Adt, active: frozenset[str]) -> list[_Val]:
    """All results of the attack side under one defence labelling, one per
    combination of OR choices reachable in it."""
    op = _operating(adt, active)

    def ev(nid: str) -> list[_Val]:
        node = adt.nodes[nid]
        t, c = node.duration, node.cost
        k = node.kind
        if k is GateKind.LEAF:
            return [_Val(True, t, c, 1, frozenset({nid}))]
        if k is GateKind.OR:
            out = []
            for child in node.children:
                for v in ev(child):
                    ch = tuple(sorted(v.choices + ((nid, child),)))
                    if v.ok:
                        out.append(_Val(True, t + v.time, c + v.cost, _staffed(t, v.agents), v.used, ch))
                    else:
                        out.append(_Val(False, choices=ch))
            return out
        if k is GateKind.NODEF:
            # succeeds through the attack, or outright when the defence is down
            attack, defence = node.children
            out = [] if op(defence) else [_Val(True, t, c, 1 if t else 0)]
            for v in ev(attack):
                if v.ok:
                    out.append(_Val(True, t + v.time, c + v.cost, _staffed(t, v.agents), v.used, v.choices))
                else:
                    out.append(_Val(False, choices=v.choices))
            return out
        if k in (GateKind.AND, GateKind.SAND):
            combos = itertools.product(*(ev(ch) for ch in node.children))
        else:
            attack, defence = node.children
            # the defence enters negated and adds nothing to attack totals
            neg = _Val(not op(defence))
            combos = ((a, neg) for a in ev(attack))
        out = []
        for parts in combos:
            ch = tuple(sorted(x for p in parts for x in p.choices))
            if not all(p.ok for p in parts):
                out.append(_Val(False, choices=ch))
                continue
            if k in (GateKind.AND, GateKind.CAND):
                time = t + max(p.time for p in parts)
                agents = sum(p.agents for p in parts)
            else:
                time = t + sum(p.time for p in parts)
                agents = max(p.agents for p in parts)
            out.append(_Val(True, time, c + sum(p.cost for p in parts), _staffed(t, agents),
                            frozenset().union(*(p.used for p in parts)), ch))
        return out

    return ev(adt.root)


def _labellings(adt: Adt) -> list[frozenset[str]]:
    """One active-defence set per distinct status of the defence subtree roots."""
    leaves = sorted(adt.defence_leaves())
    roots = sorted(set(adt.defence_roots()))
    seen = {}
    for r in range(len(leaves), -1, -1):
        for active in itertools.combinations(leaves, r):
            act = frozenset(active)
            op = _operating(adt, act)
            key = tuple(op(x) for x in roots)
            seen.setdefault(key, act)
    return list(seen.values())


def enumerate_outcomes(adt: Adt) -> list[Outcome]:
    out = []
    seen = set()
    for active in _labellings(adt):
        for v in _evaluate(adt, active):
            if v.ok:
                o = Outcome(True, v.time, v.agents, v.cost, v.used, active, v.choices)
            else:
                o = Outcome(False, defences_active=active, or_choices=v.choices)
            if o not in seen:
                seen.add(o)
                out.append(o)
    return out


def min_attack_time(adt: Adt):
    times = [o.acctime for o in enumerate_outcomes(adt) if o.succeed]
    return min(times) if times else NO_ATTACK


# ------------------------------------------------------------ agent search

@dataclass
class AgentTrace:
    # per agent: (node id, start slot, end slot), wall-clock slots from 1
    items: list[list[tuple[str, int, int]]] = field(default_factory=list)

    @property
    def agents(self) -> int:
        return len(self.items)


def _tasks(dag: Dag):
    """Seq nodes with the Seq nodes that must finish before each may start."""
    nodes = dag.nodes
    seq = sorted(k for k, v in nodes.items() if v.kind is DagNodeKind.SEQ)
    below: dict[str, frozenset[str]] = {}

    def nearest(nid: str) -> frozenset[str]:
        if nid in below:
            return below[nid]
        s: set[str] = set()
        for c in dag.children[nid]:
            if nodes[c].kind is DagNodeKind.SEQ:
                s.add(c)
            else:
                s |= nearest(c)
        below[nid] = frozenset(s)
        return below[nid]

    sys.setrecursionlimit(max(10000, len(nodes) * 4, sys.getrecursionlimit()))
    return seq, {t: nearest(t) for t in seq}


def _heights(seq: list[str], needs: dict[str, frozenset[str]]):
    """Longest chain below (inclusive) and above (exclusive) each task."""
    down: dict[str, int] = {}

    def d(t):
        if t not in down:
            down[t] = 1 + max((d(x) for x in needs[t]), default=0)
        return down[t]

    for t in seq:
        d(t)
    users: dict[str, list[str]] = {t: [] for t in seq}
    for t in seq:
        for x in needs[t]:
            users[x].append(t)
    up: dict[str, int] = {}

    def u(t):
        if t not in up:
            up[t] = max((u(x) + 1 for x in users[t]), default=0)
        return up[t]

    for t in seq:
        u(t)
    return down, up


def _search(seq, needs, slots, m, pbt, budget, counter):
    """DFS over wall-clock slots. Returns per-slot task lists or None."""
    idx = {t: i for i, t in enumerate(seq)}
    need_mask = [sum(1 << idx[x] for x in needs[t]) for t in seq]
    down, up = _heights(seq, needs)
    order = sorted(range(len(seq)), key=lambda i: (-up[seq[i]], -down[seq[i]], seq[i]))
    full = (1 << len(seq)) - 1
    failed: set[tuple[int, int]] = set()

    def go(done: int, t: int):
        if done == full:
            return []
        left = slots - t
        remaining = len(seq) - bin(done).count("1")
        if remaining > m * left:
            return None
        # a task with a chain of k tasks above it must start within left - k slots
        for i in range(len(seq)):
            if not done >> i & 1 and up[seq[i]] + 1 > left:
                return None
        ready = [i for i in order if not done >> i & 1 and need_mask[i] & done == need_mask[i]]
        if (done, t) in failed:
            return None
        counter[0] += 1
        if counter[0] > budget:
            raise OracleTimeout(budget)
        sizes = [min(m, len(ready))] if pbt else range(min(m, len(ready)), 0, -1)
        for k in sizes:
            for pick in itertools.combinations(ready, k):
                mask = done
                for i in pick:
                    mask |= 1 << i
                rest = go(mask, t + 1)
                if rest is not None:
                    return [[seq[i] for i in pick]] + rest
        failed.add((done, t))
        return None

    return go(0, 0)


def brute_force_min_agents(dag: Dag, slots: int, budget: int = 10**7, pbt: bool = True) -> tuple[int, AgentTrace]:
    """Smallest team that completes every Seq node of ``dag`` within ``slots``
    unit slots, found by exhaustive search with m = 1, 2, ... agents."""
    seq, needs = _tasks(dag)
    if not seq:
        return 0, AgentTrace([])
    counter = [0]
    sys.setrecursionlimit(max(10000, len(seq) * 4 + slots * 4, sys.getrecursionlimit()))
    for m in range(1, len(seq) + 1):
        plan = _search(seq, needs, slots, m, pbt, budget, counter)
        if plan is not None:
            return m, _trace(plan, m)
    raise Infeasible(f"no schedule fits in {slots} slots")


def _trace(plan: list[list[str]], m: int) -> AgentTrace:
    items: list[list[tuple[str, int, int]]] = [[] for _ in range(m)]
    for t, tasks in enumerate(plan, start=1):
        for a, task in enumerate(tasks):
            items[a].append((task, t, t))
    return AgentTrace(items)


def check_trace(dag: Dag, trace: AgentTrace, slots: int) -> list[str]:
    """Problems with a trace: overlaps, missing tasks, precedence, slot budget."""
    seq, needs = _tasks(dag)
    when: dict[str, int] = {}
    problems = []
    for a, row in enumerate(trace.items, start=1):
        busy = set()
        for task, start, end in row:
            for s in range(start, end + 1):
                if s in busy:
                    problems.append(f"agent {a} double-booked at {s}")
                busy.add(s)
            if task in when:
                problems.append(f"{task} scheduled twice")
            when[task] = start
            if end > slots:
                problems.append(f"{task} ends after slot {slots}")
    for t in seq:
        if t not in when:
            problems.append(f"{t} never scheduled")
            continue
        for x in needs[t]:
            if x in when and when[x] >= when[t]:
                problems.append(f"{t} starts before {x} is finished")
    return problems


# ---------------------------------------------------------------- verify

@dataclass
class Check:
    variant: int
    label: str
    makespan: int | None
    oracle_time: int | None
    agents: int
    brute_force: int | None
    agents_upper: int | None
    ok: bool
    detail: str = ""


@dataclass
class VerificationReport:
    checks: list[Check] = field(default_factory=list)
    min_time: object = NO_ATTACK
    timeout: OracleTimeout | None = None
    schedules: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.timeout is None and all(c.ok for c in self.checks)


def _status_key(adt: Adt, active: frozenset[str]) -> tuple[bool, ...]:
    op = _operating(adt, active)
    return tuple(op(r) for r in sorted(set(adt.defence_roots())))


def verify(adt: Adt, budget: int = 10**7, target=MINIMAL) -> VerificationReport:
    """Schedule every variant and compare against the oracle: makespan with
    the best outcome time under the same defence status, agents with the
    exhaustive minimum, and agents with the gate-rule upper bound."""
    variants = preprocess(adt, target)
    schedules = min_schedule(variants, target)
    labels = scenario_labels(adt, variants)
    outcomes = enumerate_outcomes(adt)
    report = VerificationReport(min_time=min_attack_time(adt), schedules=schedules)
    keyed: dict[tuple, list[Outcome]] = {}
    for o in outcomes:
        if o.succeed:
            keyed.setdefault(_status_key(adt, o.defences_active), []).append(o)

    for i, (v, s, label) in enumerate(zip(variants, schedules, labels)):
        mine = keyed.get(_status_key(adt, v.scenario.active), [])
        oracle_time = min((o.acctime for o in mine), default=None)
        if s.no_attack:
            ok = oracle_time is None
            report.checks.append(Check(i, label, None, oracle_time, 0, None, None, ok,
                                       "" if ok else "oracle finds an attack the scheduler rules out"))
            continue
        # outcomes taking the same OR branches as this variant
        same = [o for o in mine
                if all(dict(o.or_choices).get(k) == c for k, c in v.or_choices.items())]
        upper = min((o.agents_upper for o in same if o.acctime == min(x.acctime for x in same)),
                    default=None)
        try:
            m_star, trace = brute_force_min_agents(s.dag, s.bounds.slots, budget)
        except OracleTimeout as exc:
            report.timeout = exc
            report.checks.append(Check(i, label, s.makespan, oracle_time, s.agents_used,
                                       None, upper, False, str(exc)))
            return report
        detail = []
        if target is MINIMAL and s.makespan != oracle_time:
            detail.append(f"makespan {s.makespan} != oracle time {oracle_time}")
        if s.agents_used != m_star:
            detail.append(f"agents {s.agents_used} != exhaustive minimum {m_star}")
        if upper is not None and s.agents_used > upper:
            detail.append(f"agents {s.agents_used} > gate-rule upper bound {upper}")
        problems = check_trace(s.dag, trace, s.bounds.slots)
        if problems:
            detail.append("witness invalid: " + "; ".join(problems[:3]))
        report.checks.append(Check(i, label, s.makespan, oracle_time, s.agents_used, m_star,
                                   upper, not detail, "; ".join(detail)))
    return report
