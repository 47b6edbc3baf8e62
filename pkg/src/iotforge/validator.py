"""Well-formedness rules over a parsed model.

Each rule has a stable code. :func:`validate` runs all of them and returns
every finding in source order; an empty list means the model is valid.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Dict, Iterable, List, Optional

from . import model as m
from .diagnostics import ERROR, WARNING, Diagnostic, sort_diagnostics
from .instance import InstanceError, InstanceModel, build_instance_model


@dataclass(frozen=True)
class RuleId:
    code: str
    description: str


RULES: Dict[str, RuleId] = {r.code: r for r in (
    RuleId("V_DUP_NAME", "a name is declared twice within its category"),
    RuleId("V_UNRESOLVED", "a reference names nothing that is declared"),
    RuleId("V_TYPE_MISMATCH", "a property value does not fit the property type"),
    RuleId("V_PAYLOAD_CYCLE", "a payload contains itself through its attributes"),
    RuleId("V_PART_KIND", "an element or board contains a part that is not an element"),
    RuleId("V_ENTITY_PARTS", "an entity contains a part that is neither a board nor a power source"),
    RuleId("V_CONTAINMENT_CYCLE", "a component contains itself through its parts"),
    RuleId("V_PORT_MATCH", "a connection does not join a provided and a required side of one interface"),
    RuleId("V_SM_INITIAL", "a statemachine does not have exactly one initial state"),
    RuleId("V_STATE_EVENTS", "a state lacks its entry or exit event"),
    RuleId("V_EVENT_PORT", "incoming/outgoing event without a port, or generic event with one"),
    RuleId("V_ACTION_DIRECTION", "send action on a non-outgoing event, or receive on a non-incoming one"),
    RuleId("V_GUARD_TYPE", "a guard is not a boolean expression over the component's properties"),
    RuleId("V_UNREACHABLE", "a state cannot be reached from the initial state"),
    RuleId("V_UNUSED", "an event or action is never referenced"),
    RuleId("V_ALLOC_PATH", "an allocation names no instance"),
    RuleId("V_ALLOC_CORE", "an allocation names an unknown processor core"),
    RuleId("V_RT_TARGET", "an rt annotation names no instance operation, event or action"),
    RuleId("V_ALLOC_MISSING", "an annotated instance has no allocated ancestor"),
    RuleId("V_RT_VALUES", "wcet, deadline, period or priority is not positive"),
    RuleId("V_RT_OVERLOAD", "wcet exceeds the period"),
)}

WARNING_RULES = frozenset({"V_UNREACHABLE", "V_UNUSED", "V_RT_OVERLOAD"})

NUMERIC = ("int", "float")


class GuardTypeError(Exception):
    pass


def expr_type(expr: m.Expr, props: Dict[str, str], guard: bool = True) -> str:
    """Type of ``expr`` given ``props`` (property name -> type).

    With ``guard=True`` arithmetic is rejected: guards only compare values
    and combine boolean results. Raises :class:`GuardTypeError`.
    """
    if isinstance(expr, m.Literal):
        return expr.kind
    if isinstance(expr, m.Name):
        if expr.name not in props:
            raise GuardTypeError(f"unresolved property {expr.name!r}")
        return props[expr.name]
    if isinstance(expr, m.Unary):
        inner = expr_type(expr.operand, props, guard)
        if expr.op == "not":
            if inner != "bool":
                raise GuardTypeError(f"'not' needs a bool operand, got {inner}")
            return "bool"
        if guard:
            raise GuardTypeError("arithmetic is not allowed in guards")
        if inner not in NUMERIC:
            raise GuardTypeError(f"unary '-' needs a number, got {inner}")
        return inner
    left = expr_type(expr.left, props, guard)
    right = expr_type(expr.right, props, guard)
    op = expr.op
    if op in m.BOOLEAN_OPS:
        if left != "bool" or right != "bool":
            raise GuardTypeError(f"'{op}' needs bool operands, got {left} and {right}")
        return "bool"
    if op in m.ARITHMETIC_OPS:
        if guard:
            raise GuardTypeError("arithmetic is not allowed in guards")
        if left not in NUMERIC or right not in NUMERIC:
            raise GuardTypeError(f"'{op}' needs numeric operands, got {left} and {right}")
        return "float" if "float" in (left, right) else "int"
    # comparison
    if op in ("==", "!="):
        if (left in NUMERIC and right in NUMERIC) or left == right:
            return "bool"
    elif left in NUMERIC and right in NUMERIC:
        return "bool"
    raise GuardTypeError(f"cannot compare {left} {op} {right}")


def typecheck_guard(guard: m.Expr, component: m.Component) -> str:
    """Return the type of a guard over ``component``'s properties."""
    props = {p.name: p.type for p in component.properties}
    return expr_type(guard, props, guard=True)


def _assignable(target: str, value: str) -> bool:
    return target == value or (target == "float" and value == "int")


class _Checker:
    def __init__(self, model: m.Model):
        self.model = model
        self.diags: List[Diagnostic] = []
        self.payload_names = {p.name for p in model.payloads}
        self.component_names = {c.name for c in model.components}

    def report(self, code: str, loc, message: str) -> None:
        severity = WARNING if code in WARNING_RULES else ERROR
        self.diags.append(Diagnostic.at(loc, severity, code, message))

    def unique(self, items: Iterable, what: str, key=lambda x: x.name) -> None:
        seen = set()
        for item in items:
            k = key(item)
            if k in seen:
                self.report("V_DUP_NAME", item.loc, f"duplicate {what} {k!r}")
            seen.add(k)

    def known_type(self, name: str) -> bool:
        return name in m.PRIMITIVE_TYPES or name in self.payload_names

    # -- declarations ------------------------------------------------------

    def run(self) -> List[Diagnostic]:
        model = self.model
        self.unique(model.payloads, "payload")
        self.unique(model.interfaces, "interface")
        self.unique(model.components, "component")
        self.unique(model.hardware.processors, "processor")
        root_owner: Dict[str, str] = {}
        for entity in model.entities:
            root = m.root_instance_name(entity.name)
            # same entity name twice is already a duplicate component
            if root_owner.setdefault(root, entity.name) != entity.name:
                self.report("V_DUP_NAME", entity.loc, f"duplicate root instance name {root!r}")

        for payload in model.payloads:
            self.unique(payload.attributes, f"attribute in payload {payload.name}")
            for attr in payload.attributes:
                if not self.known_type(attr.type):
                    self.report("V_UNRESOLVED", attr.loc,
                                f"attribute {payload.name}.{attr.name} has unknown type {attr.type!r}")
        self.payload_cycles()

        for iface in model.interfaces:
            self.unique(iface.operations, f"operation in interface {iface.name}")
            for op in iface.operations:
                self.unique(op.params, f"parameter of {iface.name}.{op.name}")
                for p in op.params:
                    if not self.known_type(p.type):
                        self.report("V_UNRESOLVED", p.loc,
                                    f"parameter {iface.name}.{op.name}.{p.name} has unknown type {p.type!r}")
                if op.return_type and not self.known_type(op.return_type):
                    self.report("V_UNRESOLVED", op.loc,
                                f"{iface.name}.{op.name} returns unknown type {op.return_type!r}")

        for comp in model.components:
            self.component(comp)
        cyclic = self.containment_cycles()

        for proc in model.hardware.processors:
            self.unique(proc.cores, f"core in processor {proc.name}")
        self.unique(model.allocations, "allocation for", key=lambda a: a.instance)
        self.unique(model.rt_annotations, "rt annotation for", key=lambda a: a.target)
        self.deployment(cyclic)
        return sort_diagnostics(self.diags)

    def payload_cycles(self) -> None:
        graph = {p.name: {a.type for a in p.attributes if a.type in self.payload_names}
                 for p in self.model.payloads}

        def reach(start: str):
            seen, todo = set(), list(graph.get(start, ()))
            while todo:
                n = todo.pop()
                if n not in seen:
                    seen.add(n)
                    todo.extend(graph.get(n, ()))
            return seen

        reachable = {name: reach(name) for name in graph}
        reported = set()
        for payload in self.model.payloads:
            name = payload.name
            if name in reported or name not in reachable[name]:
                continue
            group = sorted(n for n in reachable[name] if name in reachable[n])
            reported.update(group)
            self.report("V_PAYLOAD_CYCLE", payload.loc,
                        f"payload {name} contains itself (cycle through {', '.join(group)})")

    def containment_cycles(self) -> bool:
        model = self.model
        found = False
        reported = set()

        def visit(comp: m.Component, stack: tuple) -> None:
            nonlocal found
            for part in comp.parts:
                sub = model.component(part.component)
                if sub is None:
                    continue
                if sub.name in stack + (comp.name,):
                    found = True
                    if sub.name not in reported:
                        reported.add(sub.name)
                        self.report("V_CONTAINMENT_CYCLE", part.loc,
                                    f"{comp.name}.{part.name} makes {sub.name} contain itself")
                    continue
                visit(sub, stack + (comp.name,))

        for comp in model.components:
            visit(comp, ())
        return found

    def component(self, comp: m.Component) -> None:
        model = self.model
        self.unique(comp.properties, f"property in {comp.name}")
        self.unique(comp.ports, f"port in {comp.name}")
        self.unique(comp.parts, f"part in {comp.name}")
        for prop in comp.properties:
            if not self.known_type(prop.type):
                self.report("V_UNRESOLVED", prop.loc,
                            f"property {comp.name}.{prop.name} has unknown type {prop.type!r}")
            elif prop.initial is not None and not _assignable(prop.type, prop.initial.kind):
                self.report("V_TYPE_MISMATCH", prop.loc,
                            f"property {comp.name}.{prop.name}: {prop.type} initialised with a {prop.initial.kind}")
        for port in comp.ports:
            if model.interface(port.interface) is None:
                self.report("V_UNRESOLVED", port.loc,
                            f"port {comp.name}.{port.name} uses unknown interface {port.interface!r}")
        for part in comp.parts:
            sub = model.component(part.component)
            if sub is None:
                self.report("V_UNRESOLVED", part.loc,
                            f"part {comp.name}.{part.name} has unknown type {part.component!r}")
            elif comp.kind == m.ENTITY:
                if not (sub.kind == m.BOARD or (sub.kind == m.ELEMENT and sub.power_source)):
                    self.report("V_ENTITY_PARTS", part.loc,
                                f"entity {comp.name} may only contain boards and power sources, "
                                f"not {sub.kind} {sub.name}")
            elif sub.kind != m.ELEMENT:
                self.report("V_PART_KIND", part.loc,
                            f"{comp.kind} {comp.name} may only contain elements, not {sub.kind} {sub.name}")
        for conn in comp.connections:
            self.connection(comp, conn)
        if comp.statemachine is not None:
            self.statemachine(comp, comp.statemachine)

    def _endpoint(self, comp: m.Component, ref: m.PortRef, loc) -> Optional[m.Port]:
        if ref.part is None:
            port = comp.port(ref.port)
            if port is None:
                self.report("V_UNRESOLVED", loc, f"{comp.name} has no port {ref.port!r}")
            return port
        part = comp.part(ref.part)
        if part is None:
            self.report("V_UNRESOLVED", loc, f"{comp.name} has no part {ref.part!r}")
            return None
        sub = self.model.component(part.component)
        if sub is None:
            return None  # already reported on the part
        port = sub.port(ref.port)
        if port is None:
            self.report("V_UNRESOLVED", loc, f"part {ref.part} ({sub.name}) has no port {ref.port!r}")
        return port

    def connection(self, comp: m.Component, conn: m.Connection) -> None:
        a = self._endpoint(comp, conn.source, conn.loc)
        b = self._endpoint(comp, conn.target, conn.loc)
        if a is None or b is None:
            return
        if self.model.interface(a.interface) is None or self.model.interface(b.interface) is None:
            return
        where = f"connection {conn.source} -> {conn.target} in {comp.name}"
        if a.interface != b.interface:
            self.report("V_PORT_MATCH", conn.loc,
                        f"{where} joins interface {a.interface} with {b.interface}")
            return
        dirs = {a.direction, b.direction}
        if m.BIDIRECTIONAL not in dirs and dirs != {m.PROVIDED, m.REQUIRED}:
            self.report("V_PORT_MATCH", conn.loc,
                        f"{where} joins two {a.direction} ports")

    def statemachine(self, comp: m.Component, sm: m.StateMachine) -> None:
        owner = comp.name
        self.unique(sm.states, f"state in {owner}")
        self.unique(sm.events, f"event in {owner}")
        self.unique(sm.actions, f"action in {owner}")

        initials = [s for s in sm.states if s.initial]
        if len(initials) != 1:
            self.report("V_SM_INITIAL", sm.loc,
                        f"statemachine of {owner} has {len(initials)} initial states, expected 1")

        used_events, used_actions = set(), set()
        for state in sm.states:
            missing = [label for label, ev in (("entry", state.on_entry), ("exit", state.on_exit))
                       if ev is None]
            if missing:
                self.report("V_STATE_EVENTS", state.loc,
                            f"state {owner}.{state.name} has no {' or '.join(missing)} event")
            for ev in (state.on_entry, state.on_exit) + state.internal:
                if ev is None:
                    continue
                used_events.add(ev)
                if sm.event(ev) is None:
                    self.report("V_UNRESOLVED", state.loc,
                                f"state {owner}.{state.name} refers to unknown event {ev!r}")

        props = {p.name: p.type for p in comp.properties}
        for tr in sm.transitions:
            for end in (tr.source, tr.target):
                if sm.state(end) is None:
                    self.report("V_UNRESOLVED", tr.loc,
                                f"transition {tr.source} -> {tr.target} in {owner}: unknown state {end!r}")
            if tr.trigger is not None:
                used_events.add(tr.trigger)
                if sm.event(tr.trigger) is None:
                    self.report("V_UNRESOLVED", tr.loc,
                                f"transition {tr.source} -> {tr.target} in {owner}: "
                                f"unknown event {tr.trigger!r}")
            if tr.guard is not None:
                try:
                    gtype = expr_type(tr.guard, props, guard=True)
                except GuardTypeError as exc:
                    self.report("V_GUARD_TYPE", tr.loc,
                                f"guard of {tr.source} -> {tr.target} in {owner}: {exc}")
                else:
                    if gtype != "bool":
                        self.report("V_GUARD_TYPE", tr.loc,
                                    f"guard of {tr.source} -> {tr.target} in {owner} is {gtype}, not bool")

        for ev in sm.events:
            if ev.kind == "generic" and ev.port is not None:
                self.report("V_EVENT_PORT", ev.loc, f"generic event {owner}.{ev.name} must not name a port")
            elif ev.kind != "generic" and ev.port is None:
                self.report("V_EVENT_PORT", ev.loc, f"{ev.kind} event {owner}.{ev.name} needs a port")
            elif ev.port is not None and comp.port(ev.port) is None:
                self.report("V_UNRESOLVED", ev.loc, f"event {owner}.{ev.name} uses unknown port {ev.port!r}")
            if ev.action is None:
                continue
            used_actions.add(ev.action)
            act = sm.action(ev.action)
            if act is None:
                self.report("V_UNRESOLVED", ev.loc,
                            f"event {owner}.{ev.name} triggers unknown action {ev.action!r}")
            elif act.kind == "send" and ev.kind != "outgoing":
                self.report("V_ACTION_DIRECTION", ev.loc,
                            f"send action {act.name} is bound to {ev.kind} event {owner}.{ev.name}")
            elif act.kind == "receive" and ev.kind != "incoming":
                self.report("V_ACTION_DIRECTION", ev.loc,
                            f"receive action {act.name} is bound to {ev.kind} event {owner}.{ev.name}")

        for act in sm.actions:
            if act.kind in ("send", "receive"):
                if act.payload not in self.payload_names:
                    self.report("V_UNRESOLVED", act.loc,
                                f"action {owner}.{act.name} uses unknown payload {act.payload!r}")
                continue
            assert act.assignment is not None
            target = comp.property(act.assignment.property)
            if target is None:
                self.report("V_UNRESOLVED", act.loc,
                            f"action {owner}.{act.name} assigns unknown property "
                            f"{act.assignment.property!r}")
                continue
            try:
                vtype = expr_type(act.assignment.value, props, guard=False)
            except GuardTypeError as exc:
                code = "V_UNRESOLVED" if str(exc).startswith("unresolved") else "V_TYPE_MISMATCH"
                self.report(code, act.loc, f"action {owner}.{act.name}: {exc}")
                continue
            if not _assignable(target.type, vtype):
                self.report("V_TYPE_MISMATCH", act.loc,
                            f"action {owner}.{act.name} assigns a {vtype} to {target.type} "
                            f"property {target.name}")

        for ev in sm.events:
            if ev.name not in used_events:
                self.report("V_UNUSED", ev.loc, f"event {owner}.{ev.name} is never used")
        for act in sm.actions:
            if act.name not in used_actions:
                self.report("V_UNUSED", act.loc, f"action {owner}.{act.name} is never used")

        start = sm.initial
        if start is not None and sm.state(start) is not None:
            reached, todo = {start}, [start]
            while todo:
                cur = todo.pop()
                for tr in sm.transitions:
                    if tr.source == cur and tr.target not in reached:
                        reached.add(tr.target)
                        todo.append(tr.target)
            for state in sm.states:
                if state.name not in reached:
                    self.report("V_UNREACHABLE", state.loc,
                                f"state {owner}.{state.name} is unreachable from {start}")

    # -- deployment --------------------------------------------------------

    def deployment(self, cyclic: bool) -> None:
        model = self.model
        for alloc in model.allocations:
            if not model.hardware.has_core(alloc.core):
                self.report("V_ALLOC_CORE", alloc.loc,
                            f"allocation of {alloc.instance} to unknown core {alloc.core}")
        for rt in model.rt_annotations:
            bad = [label for label, v in (("wcet", rt.wcet_us), ("deadline", rt.deadline_us),
                                          ("period", rt.period_us), ("priority", rt.priority))
                   if v <= 0]
            if bad:
                self.report("V_RT_VALUES", rt.loc,
                            f"rt {rt.target}: {', '.join(bad)} must be positive")
            elif rt.wcet_us > rt.period_us:
                self.report("V_RT_OVERLOAD", rt.loc,
                            f"rt {rt.target}: wcet exceeds the {rt.pattern} interval")

        if cyclic:
            return
        try:
            im = build_instance_model(replace(model, allocations=()))
        except InstanceError:
            return  # unresolved part types are reported per part
        valid = []
        for alloc in model.allocations:
            if im.find(alloc.instance) is None:
                self.report("V_ALLOC_PATH", alloc.loc,
                            f"allocation path {alloc.instance!r} {_explain_path(model, im, alloc.instance)}")
            else:
                valid.append(alloc)
        im = build_instance_model(replace(model, allocations=tuple(valid)))
        for rt in model.rt_annotations:
            node = im.find(rt.instance)
            if node is None:
                self.report("V_RT_TARGET", rt.loc,
                            f"rt target {rt.target!r}: instance {rt.instance!r} "
                            f"{_explain_path(model, im, rt.instance)}")
                continue
            if not _has_member(model, model.component(node.component), rt.member):
                self.report("V_RT_TARGET", rt.loc,
                            f"rt target {rt.target!r}: {node.component} has no operation, "
                            f"event or action {rt.member!r}")
                continue
            if im.core_of(node.path) is None:
                self.report("V_ALLOC_MISSING", rt.loc,
                            f"rt target {rt.target!r} has no allocated instance on its path")


def _explain_path(model: m.Model, im: InstanceModel, path: str) -> str:
    segs = path.split(".")
    for i in range(1, len(segs) + 1):
        if im.find(".".join(segs[:i])) is None:
            if i == 1:
                return f"does not resolve: no entity instance {segs[0]!r}"
            parent = im.find(".".join(segs[:i - 1]))
            return f"does not resolve: {parent.component} has no part {segs[i - 1]!r}"
    return "does not resolve"  # pragma: no cover


def _has_member(model: m.Model, comp: Optional[m.Component], name: str) -> bool:
    if comp is None:
        return False
    if any(op.name == name for _, op in m.provided_operations(model, comp)):
        return True
    sm = comp.statemachine
    return sm is not None and (sm.event(name) is not None or sm.action(name) is not None)


def validate(model: m.Model) -> List[Diagnostic]:
    return _Checker(model).run()
