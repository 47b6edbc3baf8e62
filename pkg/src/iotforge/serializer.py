"""Canonical text form of a :class:`~iotforge.model.Model`."""

from __future__ import annotations

from decimal import Decimal
from typing import List

from . import model as m

INDENT = "    "

_PRECEDENCE = {
    "or": 1, "and": 2, "not": 3,
    "==": 4, "!=": 4, "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5, "*": 6, "/": 6,
}
_UNARY_MINUS = 7
_ATOM = 8

_DIRECTION_KEYWORDS = {m.PROVIDED: "provides", m.REQUIRED: "requires", m.BIDIRECTIONAL: "bidir"}


def format_float(value: float) -> str:
    text = repr(float(value))
    if "e" in text or "E" in text:
        text = format(Decimal(text), "f")
    if "." not in text:
        text += ".0"
    return text


def format_literal(lit: m.Literal) -> str:
    if lit.kind == "bool":
        return "true" if lit.value else "false"
    if lit.kind == "float":
        return format_float(lit.value)
    if lit.kind == "string":
        escaped = (str(lit.value).replace("\\", "\\\\").replace('"', '\\"')
                   .replace("\n", "\\n").replace("\t", "\\t"))
        return f'"{escaped}"'
    return str(lit.value)


def _prec(expr: m.Expr) -> int:
    if isinstance(expr, m.Binary):
        return _PRECEDENCE[expr.op]
    if isinstance(expr, m.Unary):
        return _PRECEDENCE["not"] if expr.op == "not" else _UNARY_MINUS
    if isinstance(expr, m.Literal) and expr.kind in ("int", "float") and expr.value < 0:
        return _UNARY_MINUS
    return _ATOM


def format_expr(expr: m.Expr, rename=None) -> str:
    """Print an expression with single spaces and the minimum of parentheses.

    ``rename`` optionally maps property names to the names to print.
    """
    if isinstance(expr, m.Literal):
        return format_literal(expr)
    if isinstance(expr, m.Name):
        return rename(expr.name) if rename else expr.name
    if isinstance(expr, m.Unary):
        inner = format_expr(expr.operand, rename)
        if _prec(expr.operand) < _prec(expr):
            inner = f"({inner})"
        return f"not {inner}" if expr.op == "not" else f"-{inner}"
    prec = _prec(expr)
    left = format_expr(expr.left, rename)
    right = format_expr(expr.right, rename)
    if _prec(expr.left) < prec or (prec == 4 and _prec(expr.left) == 4):
        left = f"({left})"
    if _prec(expr.right) <= prec:
        right = f"({right})"
    return f"{left} {expr.op} {right}"


def format_ms(us: int) -> str:
    value = Decimal(us) / 1000
    text = format(value.normalize(), "f") if us % 1000 else str(us // 1000)
    return text


def serialize_model(model: m.Model) -> str:
    out: List[str] = [f"system {model.name} {{"]
    body: List[str] = []

    for p in model.payloads:
        attrs = ", ".join(f"{a.name}: {a.type}" for a in p.attributes)
        body.append(f"payload {p.name} {{ {attrs} }}" if attrs else f"payload {p.name} {{ }}")

    for iface in model.interfaces:
        if not iface.operations:
            body.append(f"interface {iface.name} {{ }}")
            continue
        lines = [f"interface {iface.name} {{"]
        for op in iface.operations:
            params = ", ".join(f"{p.name}: {p.type}" for p in op.params)
            ret = f" -> {op.return_type}" if op.return_type else ""
            lines.append(f"{INDENT}op {op.name}({params}){ret}")
        lines.append("}")
        body.append("\n".join(lines))

    for comp in model.components:
        body.append(_component(comp))

    if model.hardware.processors:
        lines = ["hardware {"]
        for proc in model.hardware.processors:
            cores = " ".join(f"core {c.name}" for c in proc.cores)
            lines.append(f"{INDENT}processor {proc.name} {{ {cores} }}" if cores
                         else f"{INDENT}processor {proc.name} {{ }}")
        lines.append("}")
        body.append("\n".join(lines))

    if model.allocations:
        body.append("\n".join(f"allocate {a.instance} -> {a.core}" for a in model.allocations))

    for rt in model.rt_annotations:
        body.append(
            f"rt {rt.target} {{ {rt.pattern} {format_ms(rt.period_us)} ms"
            f" wcet {format_ms(rt.wcet_us)} ms deadline {format_ms(rt.deadline_us)} ms"
            f" priority {rt.priority} }}"
        )

    for block in body:
        out.extend(INDENT + line if line else line for line in block.split("\n"))
    out.append("}")
    return "\n".join(out) + "\n"


def _component(comp: m.Component) -> str:
    head = ("powersource " if comp.power_source else "") + f"{comp.kind} {comp.name}"
    lines: List[str] = []
    for prop in comp.properties:
        init = f" = {format_literal(prop.initial)}" if prop.initial is not None else ""
        lines.append(f"property {prop.name}: {prop.type}{init};")
    for port in comp.ports:
        lines.append(f"{_DIRECTION_KEYWORDS[port.direction]} port {port.name}: {port.interface};")
    for part in comp.parts:
        lines.append(f"part {part.name}: {part.component};")
    for conn in comp.connections:
        lines.append(f"connect {conn.source} -> {conn.target};")
    if comp.statemachine is not None:
        lines.extend(_statemachine(comp.statemachine))
    if not lines:
        return f"{head} {{ }}"
    return "\n".join([f"{head} {{"] + [INDENT + ln for ln in lines] + ["}"])


def _statemachine(sm: m.StateMachine) -> List[str]:
    lines = ["statemachine {"]
    for state in sm.states:
        items = []
        if state.on_entry:
            items.append(f"entry {state.on_entry}")
        if state.on_exit:
            items.append(f"exit {state.on_exit}")
        if state.internal:
            items.append("internal " + " ".join(state.internal))
        prefix = "initial state" if state.initial else "state"
        inner = " ".join(items)
        lines.append(f"{INDENT}{prefix} {state.name} {{ {inner} }}" if inner
                     else f"{INDENT}{prefix} {state.name} {{ }}")
    for tr in sm.transitions:
        text = f"transition {tr.source} -> {tr.target}"
        if tr.trigger:
            text += f" on {tr.trigger}"
        if tr.guard is not None:
            text += f" [{format_expr(tr.guard)}]"
        lines.append(INDENT + text)
    for ev in sm.events:
        via = f" via {ev.port}" if ev.port else ""
        lines.append(f"{INDENT}event {ev.name} {ev.kind}{via} does {ev.action}")
    for act in sm.actions:
        if act.kind == "generic":
            assert act.assignment is not None
            what = f"set {act.assignment.property} = {format_expr(act.assignment.value)}"
        else:
            what = f"{act.kind} {act.payload}"
        lines.append(f"{INDENT}action {act.name} {what}")
    lines.append("}")
    return lines
