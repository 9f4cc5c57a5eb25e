"""Successor searching along walks on labeled event graphs."""

from ._jit import JIT_ENABLED
from .decision import (
    DecisionRun,
    SeparatorCertificate,
    WronglyColored,
    decide_membership,
    extract_certifying_walk,
    extract_separator,
    verify_certifying_walk,
    verify_separator,
)
from .decorated import (
    DecoratedGraph,
    ModeViolation,
    SizingError,
    oracle_membership,
    shortest_certifying_walk,
    sink_components,
    sink_summary,
)
from .event_graph import (
    EventGraph,
    GraphFormatError,
    Kind,
    Label,
    parse_graph,
    parse_set,
    read_graph,
    validate,
    write_graph,
)

__version__ = "0.1.0"

__all__ = [
    "JIT_ENABLED",
    "DecisionRun",
    "DecoratedGraph",
    "EventGraph",
    "GraphFormatError",
    "Kind",
    "Label",
    "ModeViolation",
    "SeparatorCertificate",
    "SizingError",
    "WronglyColored",
    "decide_membership",
    "extract_certifying_walk",
    "extract_separator",
    "oracle_membership",
    "parse_graph",
    "parse_set",
    "read_graph",
    "shortest_certifying_walk",
    "sink_components",
    "sink_summary",
    "validate",
    "verify_certifying_walk",
    "verify_separator",
    "write_graph",
]
