"""Tree generators: layered AND-trees for scaling runs and small random
attack-defence trees for cross-checking against the oracle."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .model import Adt, AdtNode, GateKind, Side, build


class UnsatisfiableParams(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorParams:
    depth: int
    width: int
    children: int
    nodes: int | None = None  # None: skeleton plus the fillers arity requires
    seed: int = 0


def _skeleton(p: GeneratorParams) -> list[int]:
    """Gate count per level, root level first."""
    counts = []
    below = p.width
    for _ in range(p.depth):
        below = max(1, math.ceil(below / p.children))
        counts.append(below)
    return counts[::-1]


def and_tree(p: GeneratorParams) -> Adt:
    """AND gates ``depth`` levels deep over ``width`` deepmost leaves, each gate
    taking at most ``children`` children. Extra leaves fill the shallowest gates
    first. Every node takes time 1 except the first leaf, which takes width - 1."""
    if p.depth < 1 or p.width < 1 or p.children < 2:
        raise UnsatisfiableParams("need depth >= 1, width >= 1 and children >= 2")
    gates = _skeleton(p)
    kids: list[list[list[str]]] = [[[] for _ in range(k)] for k in gates]
    names = [[f"g{lv}_{i}" for i in range(k)] for lv, k in enumerate(gates)]
    leaves = [f"l{i}" for i in range(p.width)]
    # spread each level evenly over the gates above it
    for lv in range(p.depth):
        below = names[lv + 1] if lv + 1 < p.depth else leaves
        k = len(names[lv])
        for j, child in enumerate(below):
            kids[lv][j * k // len(below)].append(child)
    if any(len(c) < 2 for c in kids[-1]):
        raise UnsatisfiableParams("a deepmost gate would have a single child")

    rng = random.Random(p.seed)
    fillers: list[tuple[int, int]] = []
    # gates left with a single child need one extra leaf
    for lv in range(p.depth - 1):
        for i, c in enumerate(kids[lv]):
            if len(c) < 2:
                fillers.append((lv, i))
    skeleton = sum(gates) + p.width
    total = skeleton + len(fillers) if p.nodes is None else p.nodes
    extra = total - skeleton - len(fillers)
    if extra < 0:
        raise UnsatisfiableParams(f"{total} nodes cannot hold the {skeleton + len(fillers)}-node skeleton")
    room = [(lv, i) for lv in range(p.depth - 1) for i in range(len(kids[lv]))]
    load = {g: len(kids[g[0]][g[1]]) for g in room}
    for g in fillers:
        load[g] += 1
    for _ in range(extra):
        open_ = [g for g in room if load[g] < p.children]
        if not open_:
            raise UnsatisfiableParams(f"no room for {total} nodes with at most {p.children} children per gate")
        top = min(g[0] for g in open_)
        g = rng.choice([g for g in open_ if g[0] == top])
        fillers.append(g)
        load[g] += 1
    for j, (lv, i) in enumerate(fillers):
        kids[lv][i].append(f"x{j}")

    nodes = [AdtNode(leaf, GateKind.LEAF, duration=max(p.width - 1, 0) if j == 0 else 1)
             for j, leaf in enumerate(leaves)]
    nodes += [AdtNode(f"x{j}", GateKind.LEAF, duration=1) for j in range(len(fillers))]
    for lv, row in enumerate(names):
        for i, name in enumerate(row):
            nodes.append(AdtNode(name, GateKind.AND, duration=1, children=tuple(kids[lv][i])))
    return build(names[0][0], nodes)


def max_nodes(depth: int, width: int, children: int) -> int:
    """Largest ``nodes`` value ``and_tree`` accepts for this shape."""
    p = GeneratorParams(depth, width, children)
    gates = _skeleton(p)
    below = gates[1:] + [width]
    capacity = sum(k * children - b for k, b in zip(gates[:-1], below[:-1]))
    return sum(gates) + width + capacity


# ------------------------------------------------------------- random corpus

def random_adt(rng: random.Random, max_units: int = 12, max_nodes: int = 9) -> Adt:
    """Small random tree whose durations sum to at most ``max_units`` time
    units, so every variant has at most that many Seq nodes."""
    counter = {"a": 0, "g": 0, "d": 0}

    def fresh(prefix):
        counter[prefix] += 1
        return f"{prefix}{counter[prefix]}"

    nodes: list[AdtNode] = []
    budget = [rng.randint(2, max_nodes)]

    def defence(depth: int = 0) -> str:
        if depth >= 2 or counter["d"] >= 3 or rng.random() < 0.7:
            nid = fresh("d")
            nodes.append(AdtNode(nid, GateKind.LEAF, Side.DEFENCE, rng.randint(0, 3), rng.randint(0, 9)))
            return nid
        kind = rng.choice([GateKind.AND, GateKind.OR])
        kids = tuple(defence(depth + 1) for _ in range(2))
        nid = fresh("g")
        nodes.append(AdtNode(nid, kind, Side.DEFENCE, 0, 0, kids))
        return nid

    def attack(top: bool) -> str:
        budget[0] -= 1
        if budget[0] <= 0 or (not top and rng.random() < 0.35):
            nid = fresh("a")
            nodes.append(AdtNode(nid, GateKind.LEAF, Side.ATTACK, rng.randint(0, 3), rng.randint(0, 9)))
            return nid
        r = rng.random()
        if r < 0.18:
            kind = rng.choice([GateKind.CAND, GateKind.NODEF, GateKind.SCAND])
            kids = (attack(False), defence())
        else:
            kind = rng.choice([GateKind.AND, GateKind.AND, GateKind.OR, GateKind.SAND])
            kids = tuple(attack(False) for _ in range(rng.choice([2, 2, 3])))
        nid = fresh("g")
        nodes.append(AdtNode(nid, kind, Side.ATTACK, rng.choice([0, 0, 0, 1, 2]), 0, kids))
        return nid

    while True:
        nodes.clear()
        for k in counter:
            counter[k] = 0
        budget[0] = rng.randint(2, max_nodes)
        root = attack(True)
        durs = [n.duration for n in nodes if n.side is Side.ATTACK]
        if sum(durs) == 0 or sum(durs) > max_units:
            continue
        return build(root, nodes)


def random_corpus(seed: int, count: int, max_units: int = 12) -> list[Adt]:
    rng = random.Random(seed)
    return [random_adt(rng, max_units) for _ in range(count)]
