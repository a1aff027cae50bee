"""Symplectic leaves, red zones and double-bracket flows of Poisson structures on R^3."""

__version__ = "0.1.0"

from .expr import Expression, ParseError, parse_expression
from .family import (
    Family,
    FamilyError,
    FamilySpec,
    build_family,
    classify_level_set,
    critical_values,
    preset,
    red_lines,
    singular_leaves,
)
from .flows import FlowOptions, FlowStatus, integrate_db_flow

__all__ = [
    "Expression",
    "Family",
    "FamilyError",
    "FamilySpec",
    "FlowOptions",
    "FlowStatus",
    "ParseError",
    "build_family",
    "classify_level_set",
    "critical_values",
    "integrate_db_flow",
    "parse_expression",
    "preset",
    "red_lines",
    "singular_leaves",
]
