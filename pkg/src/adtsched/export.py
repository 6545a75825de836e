"""Render trees, DAGs, schedules and verification reports as DOT, CSV and JSON.

All emitters are deterministic: the same input gives byte-identical output.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

from .model import Adt, GateKind, Side
from .oracle import VerificationReport
from .preprocess import Dag, DagNodeKind, scenario_labels
from .scheduler import Schedule


@dataclass(frozen=True)
class RenderOptions:
    show_depth_level: bool = False
    show_assignment: bool = False
    color_by_agent: bool = False


_DAG_SHAPES = {
    DagNodeKind.SEQ: "diamond",
    DagNodeKind.NULL: "trapezium",
    DagNodeKind.AND_JOIN: "invtriangle",
    DagNodeKind.OR_JOIN: "invtrapezium",
    DagNodeKind.ZERO_LEAF: "ellipse",
}

_PALETTE = ["#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462",
            "#b3de69", "#fccde5", "#d9d9d9", "#bc80bd", "#ccebc5", "#ffed6f"]


def _q(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def _attrs(pairs: dict[str, str]) -> str:
    return "[" + ", ".join(f"{k}={_q(v)}" for k, v in pairs.items()) + "]"


def to_dot(graph: Adt | Dag, opts: RenderOptions = RenderOptions(), assignment=None) -> str:
    """DOT digraph. For DAGs, ``assignment`` (node -> (agent, slot)) defaults
    to the agent/slot fields stored on the nodes."""
    lines = ["digraph adt {"]
    if isinstance(graph, Adt):
        for node in graph.walk():
            if node.kind is GateKind.LEAF:
                shape = "ellipse" if node.side is Side.ATTACK else "box"
                label = node.id
            else:
                shape = "invhouse" if node.side is Side.ATTACK else "house"
                label = f"{node.id}\n{node.kind.value}"
            if node.duration or node.cost:
                label += f"\nt={node.duration} c={node.cost}"
            lines.append(f"  {_q(node.id)} {_attrs({'shape': shape, 'label': label})};")
        for node in graph.walk():
            for c in node.children:
                lines.append(f"  {_q(node.id)} -> {_q(c)};")
    else:
        order = graph.topological_order()
        for nid in order:
            v = graph.nodes[nid]
            label = nid
            if opts.show_depth_level:
                label += f" d={v.depth} l={v.level}"
            pair = assignment.get(nid) if assignment is not None else (
                (v.agent, v.slot) if v.agent else None)
            if opts.show_assignment and pair:
                label += f" a={pair[0]} s={pair[1]}"
            attrs = {"shape": _DAG_SHAPES[v.kind], "label": label}
            if opts.color_by_agent and pair:
                attrs["style"] = "filled"
                attrs["fillcolor"] = _PALETTE[(pair[0] - 1) % len(_PALETTE)]
            lines.append(f"  {_q(nid)} {_attrs(attrs)};")
        for nid in order:
            for c in graph.children[nid]:
                lines.append(f"  {_q(nid)} -> {_q(c)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def schedule_cells(schedule: Schedule) -> dict[tuple[int, int], list[str]]:
    """(agent, slot) -> node ids; the Seq node first, then zero-duration nodes
    deepest first."""
    dag = schedule.dag
    pos = {nid: i for i, nid in enumerate(dag.topological_order())}
    cells: dict[tuple[int, int], list[str]] = {}
    for nid, pair in schedule.assignment.items():
        cells.setdefault(pair, []).append(nid)
    for ids in cells.values():
        ids.sort(key=lambda x: (dag.nodes[x].kind is not DagNodeKind.SEQ, -pos[x]))
    return cells


def to_schedule_csv(schedule: Schedule) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    agents = schedule.agents_used
    w.writerow(["slot"] + [f"agent_{a}" for a in range(1, agents + 1)])
    cells = schedule_cells(schedule) if schedule.dag is not None else {}
    for slot in range(schedule.slots, 0, -1):
        w.writerow([slot] + [" ".join(cells.get((a, slot), [])) for a in range(1, agents + 1)])
    return buf.getvalue()


def parse_schedule_csv(text: str) -> dict[str, tuple[int, int]]:
    """Inverse of :func:`to_schedule_csv`: node id -> (agent, slot)."""
    rows = list(csv.reader(io.StringIO(text)))
    out = {}
    for row in rows[1:]:
        slot = int(row[0])
        for a, cell in enumerate(row[1:], start=1):
            for nid in cell.split():
                out[nid] = (a, slot)
    return out


REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["variants"],
    "properties": {
        "min_attack_time": {"type": ["integer", "null"]},
        "ok": {"type": "boolean"},
        "timeout": {"type": ["string", "null"]},
        "variants": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["index", "scenario", "or_choices", "status"],
                "properties": {
                    "index": {"type": "integer", "minimum": 0},
                    "label": {"type": "string"},
                    "scenario": {
                        "type": "object",
                        "required": ["active_defences"],
                        "properties": {"active_defences": {"type": "array", "items": {"type": "string"}}},
                    },
                    "or_choices": {"type": "object", "additionalProperties": {"type": "string"}},
                    "status": {"enum": ["scheduled", "no_attack"]},
                    "makespan_minutes": {"type": "integer", "minimum": 0},
                    "slots": {"type": "integer", "minimum": 0},
                    "unit": {"type": "integer", "minimum": 1},
                    "agents": {"type": "integer", "minimum": 0},
                    "assignment": {
                        "type": "object",
                        "additionalProperties": {
                            "type": "object",
                            "required": ["agent", "slot"],
                            "properties": {
                                "agent": {"type": "integer", "minimum": 1},
                                "slot": {"type": "integer", "minimum": 1},
                            },
                        },
                    },
                    "oracle": {
                        "type": "object",
                        "properties": {
                            "ok": {"type": "boolean"},
                            "oracle_time": {"type": ["integer", "null"]},
                            "brute_force_agents": {"type": ["integer", "null"]},
                            "agents_upper": {"type": ["integer", "null"]},
                            "detail": {"type": "string"},
                        },
                    },
                },
                "if": {"properties": {"status": {"const": "no_attack"}}},
                "then": {"not": {"required": ["assignment"]}},
                "else": {"required": ["makespan_minutes", "agents", "assignment"]},
            },
        },
    },
}


def _variant_json(i: int, s: Schedule, label: str) -> dict:
    v = s.variant
    out = {
        "index": i,
        "label": label,
        "scenario": {"active_defences": sorted(v.scenario.active)},
        "or_choices": dict(sorted(v.or_choices.items())),
        "status": "no_attack" if s.no_attack else "scheduled",
    }
    if not s.no_attack:
        out.update({
            "makespan_minutes": s.makespan,
            "slots": s.slots,
            "unit": s.unit,
            "agents": s.agents_used,
            "assignment": {k: {"agent": a, "slot": t} for k, (a, t) in sorted(s.assignment.items())},
        })
    return out


def to_json_report(schedules: list[Schedule], adt: Adt, report: VerificationReport | None = None) -> str:
    labels = scenario_labels(adt, [s.variant for s in schedules])
    doc: dict = {"variants": [_variant_json(i, s, lab) for i, (s, lab) in enumerate(zip(schedules, labels))]}
    if report is not None:
        doc["ok"] = report.ok
        doc["min_attack_time"] = report.min_time if isinstance(report.min_time, int) else None
        doc["timeout"] = str(report.timeout) if report.timeout else None
        for c in report.checks:
            doc["variants"][c.variant]["oracle"] = {
                "ok": c.ok, "oracle_time": c.oracle_time, "brute_force_agents": c.brute_force,
                "agents_upper": c.agents_upper, "detail": c.detail,
            }
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
