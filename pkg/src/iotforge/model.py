"""In-memory representation of an IoT component design.

Every node is a frozen dataclass holding tuples, so a parsed :class:`Model`
is immutable and can be shared freely. Source locations are carried on each
node for diagnostics but are excluded from equality, which makes ``==`` a
structural comparison (the round-trip check relies on this).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

Loc = Optional[Tuple[int, int]]

PRIMITIVE_TYPES = ("int", "float", "bool", "string")

PROVIDED = "provided"
REQUIRED = "required"
BIDIRECTIONAL = "bidirectional"
PORT_DIRECTIONS = (PROVIDED, REQUIRED, BIDIRECTIONAL)

ELEMENT = "element"
BOARD = "board"
ENTITY = "entity"

EVENT_KINDS = ("incoming", "outgoing", "generic")
ACTION_KINDS = ("send", "receive", "generic")

PERIODIC = "periodic"
SPORADIC = "sporadic"


def _loc() -> Loc:
    return field(default=None, compare=False, repr=False)


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class Literal:
    kind: str  # int | float | bool | string
    value: Union[int, float, bool, str]


@dataclass(frozen=True)
class Name:
    name: str
    loc: Loc = _loc()


@dataclass(frozen=True)
class Unary:
    op: str  # "not" | "-"
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[Literal, Name, Unary, Binary]

COMPARISON_OPS = ("==", "!=", "<", "<=", ">", ">=")
ARITHMETIC_OPS = ("+", "-", "*", "/")
BOOLEAN_OPS = ("and", "or")


# -- structure ---------------------------------------------------------------


@dataclass(frozen=True)
class Attribute:
    name: str
    type: str
    loc: Loc = _loc()


@dataclass(frozen=True)
class Payload:
    name: str
    attributes: Tuple[Attribute, ...] = ()
    loc: Loc = _loc()


@dataclass(frozen=True)
class Param:
    name: str
    type: str
    loc: Loc = _loc()


@dataclass(frozen=True)
class Operation:
    name: str
    params: Tuple[Param, ...] = ()
    return_type: Optional[str] = None
    loc: Loc = _loc()


@dataclass(frozen=True)
class Interface:
    name: str
    operations: Tuple[Operation, ...] = ()
    loc: Loc = _loc()


@dataclass(frozen=True)
class Property:
    name: str
    type: str
    initial: Optional[Literal] = None
    loc: Loc = _loc()


@dataclass(frozen=True)
class Port:
    name: str
    direction: str
    interface: str
    loc: Loc = _loc()


@dataclass(frozen=True)
class Part:
    name: str
    component: str
    loc: Loc = _loc()


@dataclass(frozen=True)
class PortRef:
    """``part.port``, or just ``port`` for a port of the enclosing component."""

    part: Optional[str]
    port: str

    def __str__(self) -> str:
        return self.port if self.part is None else f"{self.part}.{self.port}"


@dataclass(frozen=True)
class Connection:
    source: PortRef
    target: PortRef
    loc: Loc = _loc()


@dataclass(frozen=True)
class Assignment:
    property: str
    value: Expr


@dataclass(frozen=True)
class Action:
    name: str
    kind: str  # send | receive | generic
    payload: Optional[str] = None
    assignment: Optional[Assignment] = None
    loc: Loc = _loc()


@dataclass(frozen=True)
class Event:
    name: str
    kind: str  # incoming | outgoing | generic
    port: Optional[str] = None
    action: Optional[str] = None
    loc: Loc = _loc()


@dataclass(frozen=True)
class State:
    name: str
    initial: bool = False
    on_entry: Optional[str] = None
    on_exit: Optional[str] = None
    internal: Tuple[str, ...] = ()
    loc: Loc = _loc()


@dataclass(frozen=True)
class Transition:
    source: str
    target: str
    trigger: Optional[str] = None
    guard: Optional[Expr] = None
    loc: Loc = _loc()


@dataclass(frozen=True)
class StateMachine:
    states: Tuple[State, ...] = ()
    transitions: Tuple[Transition, ...] = ()
    events: Tuple[Event, ...] = ()
    actions: Tuple[Action, ...] = ()
    loc: Loc = _loc()

    @property
    def initial(self) -> Optional[str]:
        """Name of the initial state, or None unless exactly one is marked."""
        marked = [s.name for s in self.states if s.initial]
        return marked[0] if len(marked) == 1 else None

    def state(self, name: str) -> Optional[State]:
        return _find(self.states, name)

    def event(self, name: str) -> Optional[Event]:
        return _find(self.events, name)

    def action(self, name: str) -> Optional[Action]:
        return _find(self.actions, name)


@dataclass(frozen=True)
class Component:
    name: str
    kind: str  # element | board | entity
    power_source: bool = False
    properties: Tuple[Property, ...] = ()
    ports: Tuple[Port, ...] = ()
    parts: Tuple[Part, ...] = ()
    connections: Tuple[Connection, ...] = ()
    statemachine: Optional[StateMachine] = None
    loc: Loc = _loc()

    def port(self, name: str) -> Optional[Port]:
        return _find(self.ports, name)

    def part(self, name: str) -> Optional[Part]:
        return _find(self.parts, name)

    def property(self, name: str) -> Optional[Property]:
        return _find(self.properties, name)


# -- deployment --------------------------------------------------------------


@dataclass(frozen=True)
class Core:
    name: str
    loc: Loc = _loc()


@dataclass(frozen=True)
class Processor:
    name: str
    cores: Tuple[Core, ...] = ()
    loc: Loc = _loc()


@dataclass(frozen=True)
class Hardware:
    processors: Tuple[Processor, ...] = ()

    def has_core(self, ref: "CoreRef") -> bool:
        proc = _find(self.processors, ref.processor)
        return proc is not None and _find(proc.cores, ref.core) is not None

    def core_refs(self) -> Tuple["CoreRef", ...]:
        return tuple(CoreRef(p.name, c.name) for p in self.processors for c in p.cores)


@dataclass(frozen=True, order=True)
class CoreRef:
    processor: str
    core: str

    def __str__(self) -> str:
        return f"{self.processor}.{self.core}"


@dataclass(frozen=True)
class Allocation:
    instance: str
    core: CoreRef
    loc: Loc = _loc()


@dataclass(frozen=True)
class RTAnnotation:
    """Timing properties of one operation or event action of an instance.

    Times are integer microseconds. ``period_us`` holds the period for
    periodic requests and the minimum inter-arrival time for sporadic ones.
    """

    target: str
    pattern: str
    period_us: int
    wcet_us: int
    deadline_us: int
    priority: int
    loc: Loc = _loc()

    @property
    def instance(self) -> str:
        return self.target.rpartition(".")[0]

    @property
    def member(self) -> str:
        return self.target.rpartition(".")[2]


@dataclass(frozen=True)
class Model:
    name: str
    payloads: Tuple[Payload, ...] = ()
    interfaces: Tuple[Interface, ...] = ()
    elements: Tuple[Component, ...] = ()
    boards: Tuple[Component, ...] = ()
    entities: Tuple[Component, ...] = ()
    hardware: Hardware = Hardware()
    allocations: Tuple[Allocation, ...] = ()
    rt_annotations: Tuple[RTAnnotation, ...] = ()
    loc: Loc = _loc()

    @property
    def components(self) -> Tuple[Component, ...]:
        return self.elements + self.boards + self.entities

    def component(self, name: str) -> Optional[Component]:
        return _find(self.components, name)

    def payload(self, name: str) -> Optional[Payload]:
        return _find(self.payloads, name)

    def interface(self, name: str) -> Optional[Interface]:
        return _find(self.interfaces, name)


def _find(items, name):
    for item in items:
        if item.name == name:
            return item
    return None


def root_instance_name(entity_name: str) -> str:
    """Instance name of an entity's single root instance: ``Plant`` -> ``plant``."""
    return entity_name[:1].lower() + entity_name[1:]


def provided_operations(model: Model, component: Component):
    """Yield ``(port, operation)`` for every operation the component implements.

    Provided and bidirectional ports both expose their interface's operations.
    """
    for port in component.ports:
        if port.direction == REQUIRED:
            continue
        iface = model.interface(port.interface)
        if iface is None:
            continue
        for op in iface.operations:
            yield port, op
