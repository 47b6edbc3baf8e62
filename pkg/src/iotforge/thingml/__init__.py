"""ThingML code generation and the checker for the emitted subset."""

from .checker import SubsetError, check_unit, check_units, parse_unit
from .generator import (
    GenerationError,
    Namer,
    ThingMLUnit,
    generate,
    map_component,
    map_statemachine,
)

__all__ = [
    "GenerationError", "Namer", "SubsetError", "ThingMLUnit", "check_unit", "check_units",
    "generate", "map_component", "map_statemachine", "parse_unit",
]
