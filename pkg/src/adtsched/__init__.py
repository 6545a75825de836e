"""Minimal-agent scheduling for attack-defence trees."""

from .model import Adt, AdtNode, AllZeroDurations, GateKind, Side, time_unit, validate
from .parser import AdtParseError, load, parse, serialize
from .preprocess import MINIMAL, Dag, DagNodeKind, Variant, preprocess
from .scheduler import Schedule, min_schedule, schedule_variant

__all__ = [
    "Adt", "AdtNode", "AllZeroDurations", "GateKind", "Side", "time_unit", "validate",
    "AdtParseError", "load", "parse", "serialize",
    "MINIMAL", "Dag", "DagNodeKind", "Variant", "preprocess",
    "Schedule", "min_schedule", "schedule_variant",
    "treasure_hunters_path",
]


def treasure_hunters_path() -> str:
    """Path of the bundled treasure-hunters example."""
    from importlib import resources
    return str(resources.files(__package__) / "data" / "treasure_hunters.adt")
