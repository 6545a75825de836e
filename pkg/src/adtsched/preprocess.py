"""Turn an attack-defence tree into unit-time DAG variants.

Pipeline per defence scenario: drop defences (``apply_defences``), split timed
nodes into unit chains (``normalize_time``), serialise SAND children
(``expand_sand``), then fix one branch per OR gate (``enumerate_or_variants``).
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Union

from .model import Adt, AdtNode, GateKind, Side, time_unit


class DagNodeKind(enum.Enum):
    SEQ = "Seq"
    NULL = "Null"
    AND_JOIN = "AndJoin"
    OR_JOIN = "OrJoin"
    ZERO_LEAF = "ZeroLeaf"


_RESIDUE_KIND = {
    GateKind.LEAF: DagNodeKind.ZERO_LEAF,
    GateKind.AND: DagNodeKind.AND_JOIN,
    GateKind.OR: DagNodeKind.OR_JOIN,
}


@dataclass
class DagNode:
    id: str
    origin: str
    kind: DagNodeKind
    origin_kind: GateKind = GateKind.LEAF
    depth: int = 0
    level: int = 0
    agent: int = 0
    slot: int = 0
    keep: bool = True

    @property
    def is_seq(self) -> bool:
        return self.kind is DagNodeKind.SEQ


@dataclass
class Dag:
    """Edges run parent -> child; a parent starts only after its children finish."""

    root: str
    nodes: dict[str, DagNode]
    children: dict[str, list[str]]
    unit: int = 1

    @property
    def n(self) -> int:
        return sum(1 for v in self.nodes.values() if v.kind is DagNodeKind.SEQ)

    def parents(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {nid: [] for nid in self.nodes}
        for p in self.nodes:
            for c in self.children[p]:
                out[c].append(p)
        return out

    def copy(self) -> "Dag":
        return Dag(self.root, {k: replace(v) for k, v in self.nodes.items()},
                   {k: list(v) for k, v in self.children.items()}, self.unit)

    def topological_order(self) -> list[str]:
        """Parents before children; raises CycleDetected."""
        indeg = {nid: 0 for nid in self.nodes}
        for p in self.nodes:
            for c in self.children[p]:
                indeg[c] += 1
        ready = [nid for nid, d in indeg.items() if d == 0]
        ready.reverse()
        order = []
        while ready:
            nid = ready.pop()
            order.append(nid)
            for c in reversed(self.children[nid]):
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if len(order) != len(self.nodes):
            raise CycleDetected("graph has a cycle")
        return order

    def prune_unreachable(self) -> None:
        seen = {self.root}
        stack = [self.root]
        while stack:
            for c in self.children[stack.pop()]:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        for nid in [k for k in self.nodes if k not in seen]:
            del self.nodes[nid]
            del self.children[nid]

    def critical_path(self) -> int:
        """Seq nodes on the longest root-to-leaf path."""
        best: dict[str, int] = {}
        for nid in reversed(self.topological_order()):
            below = max((best[c] for c in self.children[nid]), default=0)
            best[nid] = below + (1 if self.nodes[nid].kind is DagNodeKind.SEQ else 0)
        return best[self.root]

    def signature(self):
        """Hashable structural identity (ids, origins, kinds, edges)."""
        return (self.root, self.unit,
                tuple(sorted((v.id, v.origin, v.kind.value) for v in self.nodes.values())),
                tuple(sorted((p, c) for p in self.children for c in self.children[p])))


class CycleDetected(ValueError):
    pass


@dataclass(frozen=True)
class DefenceScenario:
    active: frozenset[str] = frozenset()

    def label(self, defences: Iterable[str]) -> str:
        return " ".join(f"{d}={'on' if d in self.active else 'off'}" for d in defences)


@dataclass
class Variant:
    scenario: DefenceScenario
    or_choices: dict[str, str] = field(default_factory=dict)
    dag: Dag | None = None
    # scenarios whose preprocessed graph coincided with this one
    merged: list[DefenceScenario] = field(default_factory=list)

    @property
    def infeasible(self) -> bool:
        return self.dag is None


class _Minimal:
    def __repr__(self):
        return "MINIMAL"


MINIMAL = _Minimal()
Target = Union[int, _Minimal]


# ---------------------------------------------------------------- defences

def defence_labelling(adt: Adt, active: frozenset[str], roots=None) -> dict[str, bool]:
    """Operating status of every defence-side node, bottom-up."""
    out: dict[str, bool] = {}

    def visit(nid: str) -> bool:
        if nid in out:
            return out[nid]
        node = adt.nodes[nid]
        if node.kind is GateKind.LEAF:
            ok = nid in active
        elif node.kind is GateKind.OR:
            ok = any([visit(c) for c in node.children])
        else:
            ok = all([visit(c) for c in node.children])
        out[nid] = ok
        return ok

    for r in adt.defence_roots() if roots is None else roots:
        visit(r)
    return out


def enumerate_defence_scenarios(adt: Adt) -> list[DefenceScenario]:
    """All subsets of defence leaves, merged by the labelling they induce on
    defence subtree roots. The first subset met (most defences active) is kept."""
    leaves = adt.defence_leaves()
    roots = adt.defence_roots()
    seen = set()
    out = []
    for bits in itertools.product((True, False), repeat=len(leaves)):
        active = frozenset(d for d, on in zip(leaves, bits) if on)
        lab = defence_labelling(adt, active, roots)
        key = tuple(lab[r] for r in roots)
        if key in seen:
            continue
        seen.add(key)
        out.append(DefenceScenario(active))
    return out


def apply_defences(adt: Adt, scenario: DefenceScenario) -> Adt | None:
    """Attack-only tree for this scenario, or None when the root attack fails.

    Countering gates become NULL placeholders (keeping their own time and cost);
    an operating CAND/SCAND defence fails its gate, and failure climbs until
    an OR gate still has another branch.
    """
    lab = defence_labelling(adt, scenario.active)
    out: dict[str, AdtNode] = {}

    def keep(node: AdtNode, kind: GateKind, children: tuple[str, ...]) -> str:
        out[node.id] = AdtNode(node.id, kind, Side.ATTACK, node.duration, node.cost,
                               children, node.condition)
        return node.id

    def visit(nid: str) -> str | None:
        node = adt.nodes[nid]
        k = node.kind
        if k is GateKind.LEAF:
            return keep(node, k, ())
        if k in (GateKind.AND, GateKind.SAND):
            kids = [visit(c) for c in node.children]
            if any(c is None for c in kids):
                return None
            return keep(node, k, tuple(kids))
        if k is GateKind.OR:
            kids = tuple(c for c in (visit(c) for c in node.children) if c is not None)
            return keep(node, k, kids) if kids else None
        attack, defence = node.children
        operating = lab[defence]
        if k is GateKind.NODEF and not operating:
            return keep(node, GateKind.NULL, ())
        if k in (GateKind.CAND, GateKind.SCAND) and operating:
            return None
        sub = visit(attack)
        if sub is None:
            return None
        return keep(node, GateKind.NULL, (sub,))

    root = visit(adt.root)
    if root is None:
        return None
    # failed branches may have left orphans behind
    tree = Adt(root, out)
    return Adt(root, {n.id: n for n in tree.walk()})


# ------------------------------------------------------------ time and SAND

def normalize_time(tree: Adt, unit: int) -> Dag:
    """Every node becomes a zero-duration residue ``N'`` below a chain
    ``N_k .. N_1`` of unit Seq nodes, k = duration / unit."""
    nodes: dict[str, DagNode] = {}
    children: dict[str, list[str]] = {}
    top: dict[str, str] = {}

    for node in tree.walk():
        if node.duration % unit:
            raise ValueError(f"{node.id}: duration {node.duration} is not a multiple of {unit}")
        k = node.duration // unit
        residue = node.id + "'"
        kind = _RESIDUE_KIND.get(node.kind, DagNodeKind.NULL)
        nodes[residue] = DagNode(residue, node.id, kind, node.kind)
        children[residue] = []
        below = residue
        for i in range(1, k + 1):
            sid = f"{node.id}_{i}"
            nodes[sid] = DagNode(sid, node.id, DagNodeKind.SEQ, node.kind)
            children[sid] = [below]
            below = sid
        top[node.id] = below

    for node in tree.nodes.values():
        children[node.id + "'"] = [top[c] for c in node.children]
    return Dag(top[tree.root], nodes, children, unit)


def _leaves_from(dag: Dag, start: str) -> list[str]:
    seen = {start}
    stack = [start]
    leaves = []
    while stack:
        nid = stack.pop()
        kids = dag.children[nid]
        if not kids:
            leaves.append(nid)
        for c in kids:
            if c not in seen:
                seen.add(c)
                stack.append(c)
    return sorted(leaves)


def expand_sand(dag: Dag) -> Dag:
    """Replace each SAND residue with Null nodes ``S'_1 .. S'_k``: ``S'_i`` sits on
    top of child subtree i and below every leaf of subtree i+1; ``S'_k`` takes the
    SAND's place. Nested SANDs are expanded innermost first."""
    dag = dag.copy()
    parents = dag.parents()
    sands = [nid for nid in reversed(dag.topological_order())
             if dag.nodes[nid].origin_kind is GateKind.SAND and dag.nodes[nid].kind is not DagNodeKind.SEQ]
    for sid in sands:
        sand = dag.nodes[sid]
        kids = dag.children[sid]
        base = sand.origin + "'"
        nulls = []
        for i, c in enumerate(kids, start=1):
            nid = f"{base}_{i}"
            dag.nodes[nid] = DagNode(nid, sand.origin, DagNodeKind.NULL, GateKind.SAND)
            dag.children[nid] = [c]
            nulls.append(nid)
        # chain N_i below the leaves of T_{i+1}
        for i in range(len(kids) - 1):
            for leaf in _leaves_from(dag, kids[i + 1]):
                dag.children[leaf].append(nulls[i])
        last = nulls[-1]
        for p in parents[sid]:
            dag.children[p] = [last if c == sid else c for c in dag.children[p]]
        if dag.root == sid:
            dag.root = last
        del dag.nodes[sid]
        del dag.children[sid]
        parents = dag.parents()
    return dag


# --------------------------------------------------------------- OR choices

def _choices_product(dag: Dag) -> list[tuple[dict[str, str], Dag]]:
    """Every way of fixing one child per reachable OR join (nested ORs are only
    branched on when they survive the enclosing choice)."""
    pending = [({}, dag)]
    done = []
    while pending:
        choices, g = pending.pop()
        order = g.topological_order()
        open_or = next((nid for nid in order if g.nodes[nid].kind is DagNodeKind.OR_JOIN
                        and g.nodes[nid].origin not in choices), None)
        if open_or is None:
            done.append((choices, g))
            continue
        kids = g.children[open_or]
        branches = []
        for c in kids:
            h = g.copy() if len(kids) > 1 else g
            h.children[open_or] = [c]
            h.prune_unreachable()
            branches.append(({**choices, g.nodes[open_or].origin: g.nodes[c].origin}, h))
        pending.extend(reversed(branches))
    return done


def enumerate_or_variants(dag: Dag, target_slots: Target = MINIMAL) -> list[tuple[dict[str, str], Dag]]:
    """One graph per OR-choice combination, dropping those whose critical path
    strictly exceeds the target (the best critical path under MINIMAL).
    The shortest variants always survive."""
    combos = _choices_product(dag)
    paths = [g.critical_path() for _, g in combos]
    best = min(paths)
    limit = best if isinstance(target_slots, _Minimal) else max(int(target_slots), best)
    return [(ch, g) for (ch, g), cp in zip(combos, paths) if cp <= limit]


def preprocess(adt: Adt, target: Target = MINIMAL) -> list[Variant]:
    unit = time_unit(adt)
    out: list[Variant] = []
    by_sig: dict = {}
    for scenario in enumerate_defence_scenarios(adt):
        tree = apply_defences(adt, scenario)
        if tree is None:
            out.append(Variant(scenario))
            continue
        dag = expand_sand(normalize_time(tree, unit))
        for choices, g in enumerate_or_variants(dag, target):
            sig = g.signature()
            if sig in by_sig:
                by_sig[sig].merged.append(scenario)
                continue
            v = Variant(scenario, choices, g)
            by_sig[sig] = v
            out.append(v)
    return out


def scenario_labels(adt: Adt, variants: list[Variant]) -> list[str]:
    """Human labels such as ``p=off``; OR choices are appended only when a
    scenario produced more than one variant."""
    defences = adt.defence_leaves()
    counts: dict[DefenceScenario, int] = {}
    for v in variants:
        counts[v.scenario] = counts.get(v.scenario, 0) + 1
    labels = []
    for v in variants:
        parts = [v.scenario.label(defences)] if defences else []
        if counts[v.scenario] > 1 or not defences:
            parts += [f"{k}={c}" for k, c in sorted(v.or_choices.items())]
        labels.append(" ".join(parts) or "-")
    return labels
