"""Model to ThingML transformation.

Mapping: elements and boards become things, payloads become messages of a
shared ``thing fragment``, ports/properties/operations become ThingML
ports/properties/functions, and the state machine becomes a statechart.
Entities have no thing of their own; their instance trees make up the
``configuration`` unit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .. import model as m
from ..diagnostics import Diagnostic, has_errors
from ..instance import InstanceModel, build_instance_model
from ..serializer import format_expr, format_literal
from ..validator import validate

INDENT = "    "

TYPE_MAP = {"int": "Integer", "float": "Double", "bool": "Boolean", "string": "String"}
_DEFAULTS = {"Integer": "0", "Double": "0.0", "Boolean": "false", "String": '""'}
_PRIMITIVE_DECLS = (
    ("Integer", 'datatype Integer<4>\n    @type_checker "Integer";'),
    ("Double", 'datatype Double<8>\n    @type_checker "Real";'),
    ("Boolean", 'datatype Boolean<1>\n    @type_checker "Boolean";'),
    ("String", 'object String\n    @type_checker "String";'),
)

# words of the emitted subset that cannot serve as identifiers
KEYWORDS = frozenset({
    "action", "and", "configuration", "connector", "datatype", "do", "end", "entry", "event",
    "exit", "false", "fragment", "function", "guard", "import", "includes", "init", "instance",
    "internal", "message", "not", "object", "on", "or", "port", "property", "provided",
    "receives", "required", "sends", "state", "statechart", "thing", "transition", "true",
})

DATATYPES_FILE = "datatypes.thingml"
MESSAGES_FILE = "messages.thingml"
CONFIGURATION_FILE = "configuration.thingml"


class GenerationError(Exception):
    def __init__(self, diagnostics: List[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("model has validation errors; nothing generated")


@dataclass
class ThingMLUnit:
    file_name: str
    text: str
    provenance: Dict[str, str] = field(default_factory=dict)


class Namer:
    """Hands out identifiers unique within one unit, appending ``_2``, ``_3``..."""

    def __init__(self, reserved=()):
        self.used = set(KEYWORDS) | set(reserved)
        self.names: Dict[Tuple[str, str], str] = {}

    def __call__(self, category: str, base: str) -> str:
        key = (category, base)
        if key not in self.names:
            candidate, n = base, 2
            while candidate in self.used:
                candidate = f"{base}_{n}"
                n += 1
            self.used.add(candidate)
            self.names[key] = candidate
        return self.names[key]

    def get(self, category: str, base: str) -> str:
        return self.names[(category, base)]


def message_name(payload: str) -> str:
    return payload[:1].lower() + payload[1:]


class _Context:
    """Names shared across units: types, messages, things, the fragment."""

    def __init__(self, model: m.Model):
        self.model = model
        self.fragment = f"{model.name}Msgs"
        types = Namer(reserved=[name for name, _ in _PRIMITIVE_DECLS])
        self.types = {p.name: types("object", p.name) for p in model.payloads}
        msgs = Namer(reserved=[self.fragment])
        self.messages = {p.name: msgs("message", message_name(p.name)) for p in model.payloads}
        things = Namer(reserved=[self.fragment])
        self.things = {c.name: things("thing", c.name) for c in model.elements + model.boards}

    def type_name(self, semantic: str) -> str:
        return TYPE_MAP.get(semantic) or self.types[semantic]

    def default(self, semantic: str) -> str:
        # payload-typed values have no literal form; 0 stands for an empty handle
        return _DEFAULTS.get(TYPE_MAP.get(semantic, ""), "0")


def generate(model: m.Model) -> List[ThingMLUnit]:
    """Emit the datatype prelude, the message fragment, one unit per thing
    and the configuration, in that order. Output is deterministic.

    Raises :class:`GenerationError` if the model does not validate.
    """
    diags = validate(model)
    if has_errors(diags):
        raise GenerationError(diags)
    ctx = _Context(model)
    units = [_datatypes_unit(ctx), _messages_unit(ctx)]
    for comp in model.elements + model.boards:
        units.append(_thing_unit(ctx, comp))
    units.append(_configuration_unit(ctx, build_instance_model(model)))
    return units


def _datatypes_unit(ctx: _Context) -> ThingMLUnit:
    lines = [f"// Datatypes for {ctx.model.name}", ""]
    lines += [decl for _, decl in _PRIMITIVE_DECLS]
    prov = {}
    for payload in ctx.model.payloads:
        name = ctx.types[payload.name]
        lines.append(f'object {name}\n    @type_checker "Object";')
        prov[f"object {name}"] = f"payload-type {payload.name}"
    return ThingMLUnit(DATATYPES_FILE, "\n".join(lines) + "\n", prov)


def _messages_unit(ctx: _Context) -> ThingMLUnit:
    lines = [f'import "{DATATYPES_FILE}"', "", f"thing fragment {ctx.fragment} {{"]
    prov = {}
    for payload in ctx.model.payloads:
        name = ctx.messages[payload.name]
        local = Namer()
        params = ", ".join(f"{local('param', a.name)} : {ctx.type_name(a.type)}"
                           for a in payload.attributes)
        lines.append(f"{INDENT}message {name}({params});")
        prov[f"message {name}"] = f"payload {payload.name}"
    lines.append("}")
    return ThingMLUnit(MESSAGES_FILE, "\n".join(lines) + "\n", prov)


def _port_messages(ctx: _Context, comp: m.Component, port: m.Port) -> Tuple[List[str], List[str]]:
    sends: List[str] = []
    receives: List[str] = []
    sm = comp.statemachine
    if sm is None:
        return sends, receives
    for ev in sm.events:
        if ev.port != port.name:
            continue
        act = sm.action(ev.action) if ev.action else None
        if act is None or act.payload is None:
            continue
        msg = ctx.messages[act.payload]
        if ev.kind == "outgoing" and act.kind == "send" and msg not in sends:
            sends.append(msg)
        elif ev.kind == "incoming" and act.kind == "receive" and msg not in receives:
            receives.append(msg)
    return sends, receives


def port_keyword(comp: m.Component, port: m.Port) -> str:
    """ThingML has no bidirectional ports. A board is the client of its parts,
    so a bidirectional board port becomes required and any other one provided."""
    if port.direction == m.REQUIRED or (port.direction == m.BIDIRECTIONAL and comp.kind == m.BOARD):
        return "required"
    return "provided"


def map_component(model: m.Model, component: m.Component) -> str:
    """ThingML ``thing`` declaration for one element or board."""
    ctx = _Context(model)
    text, _ = _thing_text(ctx, component)
    return text


def _thing_unit(ctx: _Context, comp: m.Component) -> ThingMLUnit:
    text, prov = _thing_text(ctx, comp)
    header = f'import "{DATATYPES_FILE}"\nimport "{MESSAGES_FILE}"\n\n'
    return ThingMLUnit(f"{ctx.things[comp.name]}.thingml", header + text, prov)


def _thing_text(ctx: _Context, comp: m.Component) -> Tuple[str, Dict[str, str]]:
    thing = ctx.things[comp.name]
    names = Namer(reserved=[thing, ctx.fragment])
    prov = {f"thing {thing}": f"component {comp.name}"}
    body: List[str] = []

    for prop in comp.properties:
        name = names("property", prop.name)
        init = f" = {format_literal(prop.initial)}" if prop.initial is not None else ""
        body.append(f"property {name} : {ctx.type_name(prop.type)}{init}")
        prov[f"property {thing}.{name}"] = f"property {comp.name}.{prop.name}"

    for port in comp.ports:
        name = names("port", port.name)
        keyword = port_keyword(comp, port)
        sends, receives = _port_messages(ctx, comp, port)
        inner = []
        if sends:
            inner.append(f"sends {', '.join(sends)}")
        if receives:
            inner.append(f"receives {', '.join(receives)}")
        if inner:
            body.append(f"{keyword} port {name} {{")
            body.extend(INDENT + line for line in inner)
            body.append("}")
        else:
            body.append(f"{keyword} port {name} {{ }}")
        prov[f"port {thing}.{name}"] = f"port {comp.name}.{port.name}"

    seen_ops = set()
    for port, op in m.provided_operations(ctx.model, comp):
        key = (port.interface, op.name)
        if key in seen_ops:
            continue
        seen_ops.add(key)
        name = names("function", op.name)
        local = Namer()
        params = ", ".join(f"{local('param', p.name)} : {ctx.type_name(p.type)}" for p in op.params)
        ret = f" : {ctx.type_name(op.return_type)}" if op.return_type else ""
        body.append(f"function {name}({params}){ret} do")
        body.append(f"{INDENT}// TODO: implement {op.name}; the model defines its signature only")
        body.append("end")
        prov[f"function {thing}.{name}"] = f"operation {comp.name}.{port.interface}.{op.name}"

    if comp.statemachine is not None:
        text, sm_prov = _statechart(ctx, comp, comp.statemachine, names, thing)
        body.extend(text)
        prov.update(sm_prov)

    if not body:
        return f"thing {thing} includes {ctx.fragment} {{ }}\n", prov
    lines = [f"thing {thing} includes {ctx.fragment} {{"]
    lines += [INDENT + line if line else line for line in body]
    lines.append("}")
    return "\n".join(lines) + "\n", prov


def map_statemachine(model: m.Model, sm: m.StateMachine, component: m.Component) -> str:
    """ThingML ``statechart`` text for a component's state machine."""
    ctx = _Context(model)
    names = Namer(reserved=[ctx.things.get(component.name, component.name), ctx.fragment])
    for prop in component.properties:
        names("property", prop.name)
    for port in component.ports:
        names("port", port.name)
    lines, _ = _statechart(ctx, component, sm, names, component.name)
    return "\n".join(lines) + "\n"


def _statement(ctx: _Context, comp: m.Component, event: m.Event, names: Namer) -> Optional[str]:
    sm = comp.statemachine
    act = sm.action(event.action) if event.action else None
    if act is None or act.kind == "receive":
        return None
    prop_name = lambda p: names.get("property", p)  # noqa: E731
    if act.kind == "send":
        payload = ctx.model.payload(act.payload)
        args = []
        for attr in payload.attributes:
            if comp.property(attr.name) is not None:
                args.append(prop_name(attr.name))
            else:
                args.append(ctx.default(attr.type))
        port = names.get("port", event.port)
        return f"{port}!{ctx.messages[act.payload]}({', '.join(args)})"
    assert act.assignment is not None
    value = format_expr(act.assignment.value, prop_name)
    return f"{prop_name(act.assignment.property)} = {value}"


def _block(stmt: Optional[str]) -> str:
    return f"do {stmt} end" if stmt else "do end"


def _statechart(ctx: _Context, comp: m.Component, sm: m.StateMachine, names: Namer,
                thing: str) -> Tuple[List[str], Dict[str, str]]:
    chart = names("statechart", f"{comp.name}SM")
    for state in sm.states:
        names("state", state.name)
    prov: Dict[str, str] = {}
    scope = f"{thing}.{chart}"
    prop_name = lambda p: names.get("property", p)  # noqa: E731

    def note_event(ev_name: str) -> m.Event:
        ev = sm.event(ev_name)
        prov.setdefault(f"event {scope}.{ev.name}", f"event {comp.name}.{ev.name}")
        if ev.action:
            prov.setdefault(f"action {scope}.{ev.action}", f"action {comp.name}.{ev.action}")
        return ev

    lines = [f"statechart {chart} init {names.get('state', sm.initial)} {{"]
    for state in sm.states:
        sname = names.get("state", state.name)
        prov[f"state {scope}.{sname}"] = f"state {comp.name}.{state.name}"
        lines.append(f"{INDENT}state {sname} {{")
        entry = note_event(state.on_entry)
        lines.append(f"{INDENT * 2}on entry {_block(_statement(ctx, comp, entry, names))}")
        exit_ = note_event(state.on_exit)
        lines.append(f"{INDENT * 2}on exit {_block(_statement(ctx, comp, exit_, names))}")
        for ev_name in state.internal:
            ev = note_event(ev_name)
            trigger = _receive_trigger(ctx, sm, ev, names)
            if trigger:
                lines.append(f"{INDENT * 2}internal {trigger} action do end")
            else:
                lines.append(f"{INDENT * 2}internal action {_block(_statement(ctx, comp, ev, names))}")
        for index, tr in enumerate(sm.transitions):
            if tr.source != state.name:
                continue
            text = f"transition -> {names.get('state', tr.target)}"
            stmt = None
            if tr.trigger is not None:
                ev = note_event(tr.trigger)
                trigger = _receive_trigger(ctx, sm, ev, names)
                if trigger:
                    text += f" {trigger}"
                else:
                    stmt = _statement(ctx, comp, ev, names)
            if tr.guard is not None:
                text += f" guard ({format_expr(tr.guard, prop_name)})"
                prov[f"guard {scope}#{index}"] = f"guard {comp.name}#{index}"
            if stmt:
                text += f" action {_block(stmt)}"
            lines.append(INDENT * 2 + text)
            prov[f"transition {scope}#{index}"] = f"transition {comp.name}#{index}"
        lines.append(f"{INDENT}}}")
    lines.append("}")
    prov[f"statechart {scope}"] = f"statemachine {comp.name}"
    return lines, prov


def _receive_trigger(ctx: _Context, sm: m.StateMachine, ev: m.Event, names: Namer) -> Optional[str]:
    if ev.kind != "incoming":
        return None
    act = sm.action(ev.action) if ev.action else None
    if act is None or act.kind != "receive":
        return None
    return f"event {names.get('port', ev.port)}?{ctx.messages[act.payload]}"


def _configuration_unit(ctx: _Context, im: InstanceModel) -> ThingMLUnit:
    model = ctx.model
    names = Namer(reserved=ctx.things.values())
    cfg = names("configuration", model.name)
    prov = {f"configuration {cfg}": f"system {model.name}"}
    for entity in model.entities:
        prov[f"configuration {cfg}/{m.root_instance_name(entity.name)}"] = f"component {entity.name}"

    imports = [f'import "{DATATYPES_FILE}"', f'import "{MESSAGES_FILE}"']
    imports += [f'import "{ctx.things[c.name]}.thingml"' for c in model.elements + model.boards]

    body = []
    inst_names: Dict[str, str] = {}
    for node in im.instances:
        name = names("instance", node.path.replace(".", "_"))
        inst_names[node.path] = name
        body.append(f"instance {name} : {ctx.things[node.component]}")
        prov[f"instance {name}"] = f"instance {node.path}"

    nodes = {n.path: n for n in im.instances}
    for index, conn in enumerate(im.connections):
        ends = []
        for end in (conn.source, conn.target):
            node = nodes.get(end.instance)
            if node is None:
                break  # entity-level port: no thing instance to attach to
            comp = model.component(node.component)
            ends.append((end, port_keyword(comp, comp.port(end.port))))
        if len(ends) != 2:
            continue
        # ThingML connectors read required => provided
        if ends[0][1] == "provided":
            ends.reverse()
        (a, _), (b, _) = ends
        body.append(f"connector {inst_names[a.instance]}.{a.port} => {inst_names[b.instance]}.{b.port}")
        prov[f"connector {cfg}#{index}"] = f"connection {conn.owner}: {conn.source} -> {conn.target}"

    lines = imports + ["", f"configuration {cfg} {{"]
    lines += [INDENT + line for line in body]
    lines.append("}")
    return ThingMLUnit(CONFIGURATION_FILE, "\n".join(lines) + "\n", prov)
