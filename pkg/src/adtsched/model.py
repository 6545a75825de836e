"""Attack-defence tree types and structural validation."""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from functools import reduce
from types import MappingProxyType
from typing import Mapping

NODE_ID_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_']*\Z")


class GateKind(enum.Enum):
    LEAF = "LEAF"
    AND = "AND"
    OR = "OR"
    SAND = "SAND"
    CAND = "CAND"
    NODEF = "NODEF"
    SCAND = "SCAND"
    # Placeholder left behind by defence handling; never appears in parsed files.
    NULL = "NULL"

    @property
    def countering(self) -> bool:
        return self in COUNTERING


COUNTERING = frozenset({GateKind.CAND, GateKind.NODEF, GateKind.SCAND})


class Side(enum.Enum):
    ATTACK = "attack"
    DEFENCE = "defence"


@dataclass(frozen=True)
class AdtNode:
    id: str
    kind: GateKind
    side: Side = Side.ATTACK
    duration: int = 0
    cost: int = 0
    children: tuple[str, ...] = ()
    # opaque, never evaluated
    condition: str | None = None


@dataclass(frozen=True)
class Adt:
    root: str
    nodes: Mapping[str, AdtNode] = field(hash=False)

    def __post_init__(self):
        if not isinstance(self.nodes, MappingProxyType):
            object.__setattr__(self, "nodes", MappingProxyType(dict(self.nodes)))

    def __eq__(self, other):
        if not isinstance(other, Adt):
            return NotImplemented
        return self.root == other.root and dict(self.nodes) == dict(other.nodes)

    def __hash__(self):
        return hash((self.root, tuple(sorted(self.nodes))))

    def __getitem__(self, node_id: str) -> AdtNode:
        return self.nodes[node_id]

    def parents(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {nid: [] for nid in self.nodes}
        for node in self.nodes.values():
            for c in node.children:
                if c in out:
                    out[c].append(node.id)
        return out

    def walk(self):
        """Pre-order traversal from the root (children in stored order)."""
        stack = [self.root]
        seen = set()
        while stack:
            nid = stack.pop()
            if nid in seen or nid not in self.nodes:
                continue
            seen.add(nid)
            yield self.nodes[nid]
            stack.extend(reversed(self.nodes[nid].children))

    def defence_leaves(self) -> list[str]:
        return [n.id for n in self.nodes.values()
                if n.kind is GateKind.LEAF and n.side is Side.DEFENCE]

    def defence_roots(self) -> list[str]:
        """Defence children of countering gates, in declaration order."""
        return [n.children[1] for n in self.nodes.values()
                if n.kind.countering and len(n.children) == 2]


class AllZeroDurations(ValueError):
    pass


@dataclass(frozen=True)
class Violation:
    node: str
    rule: str
    message: str


# rule names
ARITY = "ArityViolation"
BAD_ID = "IdViolation"
UNKNOWN_CHILD = "UnknownChild"
MULTI_PARENT = "MultipleParents"
CYCLE = "Cycle"
UNREACHABLE = "Unreachable"
SIDE = "SideViolation"
NEGATIVE = "NegativeAttribute"
ROOT = "RootViolation"

_MIN_CHILDREN = {
    GateKind.LEAF: (0, 0),
    GateKind.AND: (2, None),
    GateKind.OR: (2, None),
    GateKind.SAND: (2, None),
    GateKind.CAND: (2, 2),
    GateKind.NODEF: (2, 2),
    GateKind.SCAND: (2, 2),
    GateKind.NULL: (0, 1),
}


def validate(adt: Adt) -> list[Violation]:
    out: list[Violation] = []
    nodes = adt.nodes
    if adt.root not in nodes:
        return [Violation(adt.root, ROOT, f"root {adt.root!r} is not a declared node")]

    for node in nodes.values():
        if not NODE_ID_RE.match(node.id):
            out.append(Violation(node.id, BAD_ID, f"malformed identifier {node.id!r}"))
        lo, hi = _MIN_CHILDREN[node.kind]
        k = len(node.children)
        if k < lo or (hi is not None and k > hi):
            want = f"exactly {lo}" if lo == hi else f"at least {lo}" if hi is None else f"{lo}..{hi}"
            out.append(Violation(node.id, ARITY,
                                 f"{node.kind.value} takes {want} children, got {k}"))
        if node.duration < 0 or node.cost < 0:
            out.append(Violation(node.id, NEGATIVE, "time and cost must be non-negative"))
        for c in node.children:
            if c not in nodes:
                out.append(Violation(node.id, UNKNOWN_CHILD, f"child {c!r} is not declared"))

    parents = adt.parents()
    if parents[adt.root]:
        out.append(Violation(adt.root, ROOT, "root has a parent"))
    for nid, ps in parents.items():
        if len(ps) > 1:
            out.append(Violation(nid, MULTI_PARENT, f"referenced by {', '.join(ps)}"))

    # cycles and reachability by DFS from the root
    state: dict[str, int] = {}
    stack = [(adt.root, iter(nodes[adt.root].children))]
    state[adt.root] = 1
    while stack:
        nid, it = stack[-1]
        for c in it:
            if c not in nodes:
                continue
            if state.get(c) == 1:
                out.append(Violation(c, CYCLE, f"cycle through {nid} -> {c}"))
            elif c not in state:
                state[c] = 1
                stack.append((c, iter(nodes[c].children)))
                break
        else:
            state[nid] = 2
            stack.pop()
    for nid in nodes:
        if nid not in state:
            out.append(Violation(nid, UNREACHABLE, "not reachable from the root"))

    if nodes[adt.root].side is not Side.ATTACK:
        out.append(Violation(adt.root, SIDE, "root must be on the attack side"))
    for node in nodes.values():
        if _has_unknown_child(node, nodes):
            continue
        for pos, c in enumerate(node.children):
            child = nodes[c]
            expected = node.side
            if node.kind.countering and pos == 1:
                expected = Side.DEFENCE
            if child.side is not expected:
                out.append(Violation(c, SIDE,
                                     f"{child.side.value} node under {node.id} "
                                     f"where {expected.value} is required"))
        if node.kind.countering and node.side is Side.DEFENCE:
            out.append(Violation(node.id, SIDE,
                                 "countering gates are only supported on the attack side"))
    return out


def _has_unknown_child(node: AdtNode, nodes: Mapping[str, AdtNode]) -> bool:
    return any(c not in nodes for c in node.children)


def time_unit(adt: Adt) -> int:
    durations = [n.duration for n in adt.nodes.values() if n.duration > 0]
    if not durations:
        raise AllZeroDurations("every node has duration 0")
    return reduce(math.gcd, durations)


def build(root: str, nodes) -> Adt:
    """Convenience constructor from an iterable of AdtNode, with sides propagated
    from the root (leaf sides are kept as given)."""
    table = {n.id: n for n in nodes}
    return Adt(root, propagate_sides(root, table))


def propagate_sides(root: str, table: dict[str, AdtNode]) -> dict[str, AdtNode]:
    """Assign gate sides top-down: the root is an attack, the second child of a
    countering gate is a defence, everything else inherits. Leaves keep their
    declared side so that validate can report mismatches."""
    out = dict(table)
    if root not in table:
        return out
    stack = [(root, Side.ATTACK)]
    seen = set()
    while stack:
        nid, side = stack.pop()
        if nid in seen or nid not in table:
            continue
        seen.add(nid)
        node = table[nid]
        if node.kind is not GateKind.LEAF and node.side is not side:
            node = AdtNode(node.id, node.kind, side, node.duration, node.cost,
                           node.children, node.condition)
            out[nid] = node
        for pos, c in enumerate(node.children):
            child_side = Side.DEFENCE if node.kind.countering and pos == 1 else side
            stack.append((c, child_side))
    return out
