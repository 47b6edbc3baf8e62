"""Syntax and reference checker for the ThingML subset the generator emits.

The grammar accepted here is the one written down in
``docs/thingml-subset.ebnf``. :func:`check_unit` checks a single file;
:func:`check_units` additionally resolves names across a generated set.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set, Tuple

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|//[^\n]*)
  | (?P<float>\d+\.\d+)
  | (?P<int>\d+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>=>|->|==|!=|<=|>=|[{}()<>:;,.=!?@+\-*/])
""", re.VERBOSE)


class SubsetError(Exception):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


@dataclass
class Tok:
    kind: str
    text: str
    line: int


def _tokenize(text: str) -> List[Tok]:
    toks, pos, line = [], 0, 1
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if match is None:
            raise SubsetError(f"unexpected character {text[pos]!r}", line)
        kind = match.lastgroup
        if kind != "ws":
            toks.append(Tok(kind, match.group(), line))
        line += match.group().count("\n")
        pos = match.end()
    toks.append(Tok("eof", "", line))
    return toks


@dataclass
class Thing:
    name: str
    fragment: bool
    includes: List[str] = field(default_factory=list)
    messages: Dict[str, List[str]] = field(default_factory=dict)  # name -> param types
    properties: Dict[str, str] = field(default_factory=dict)
    ports: Dict[str, Tuple[List[str], List[str]]] = field(default_factory=dict)
    required: Set[str] = field(default_factory=set)
    functions: List[str] = field(default_factory=list)
    states: List[str] = field(default_factory=list)
    # (line, kind, name) references to resolve once the whole thing is read
    refs: List[Tuple[int, str, str]] = field(default_factory=list)


@dataclass
class UnitSummary:
    """What a unit declares and which names it uses."""

    imports: List[str] = field(default_factory=list)
    types: List[str] = field(default_factory=list)
    things: List[Thing] = field(default_factory=list)
    instances: Dict[str, str] = field(default_factory=dict)
    connectors: List[Tuple[int, str, str, str, str]] = field(default_factory=list)
    configurations: List[str] = field(default_factory=list)
    type_refs: List[Tuple[int, str]] = field(default_factory=list)


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.out = UnitSummary()

    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("ident", "op")

    def expect(self, text: str) -> Tok:
        if not self.at(text):
            raise SubsetError(f"expected {text!r}, found {self.tok.text or 'end of file'!r}", self.tok.line)
        return self._advance()

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def ident(self) -> str:
        if self.tok.kind != "ident":
            raise SubsetError(f"expected identifier, found {self.tok.text or 'end of file'!r}", self.tok.line)
        return self._advance().text

    def _advance(self) -> Tok:
        tok = self.tok
        self.i += 1
        return tok

    def type_ref(self) -> str:
        line = self.tok.line
        name = self.ident()
        self.out.type_refs.append((line, name))
        return name

    # unit ::= import* declaration* EOF
    def unit(self) -> UnitSummary:
        while self.accept("import"):
            if self.tok.kind != "string":
                raise SubsetError("expected a quoted file name after 'import'", self.tok.line)
            self.out.imports.append(self._advance().text[1:-1])
        while self.tok.kind != "eof":
            if self.accept("datatype"):
                self.out.types.append(self.ident())
                self.expect("<")
                if self.tok.kind != "int":
                    raise SubsetError("expected a byte size", self.tok.line)
                self._advance()
                self.expect(">")
                self.annotations()
                self.expect(";")
            elif self.accept("object"):
                self.out.types.append(self.ident())
                self.annotations()
                self.expect(";")
            elif self.at("thing"):
                self.thing()
            elif self.at("configuration"):
                self.configuration()
            else:
                raise SubsetError(f"unexpected {self.tok.text!r} at top level", self.tok.line)
        return self.out

    def annotations(self) -> None:
        while self.accept("@"):
            self.ident()
            if self.tok.kind != "string":
                raise SubsetError("annotation needs a string value", self.tok.line)
            self._advance()

    def thing(self) -> None:
        self.expect("thing")
        fragment = self.accept("fragment")
        thing = Thing(self.ident(), fragment)
        if self.accept("includes"):
            thing.includes.append(self.ident())
            while self.accept(","):
                thing.includes.append(self.ident())
        self.expect("{")
        while not self.accept("}"):
            if self.accept("message"):
                name = self.ident()
                thing.messages[name] = [t for _, t in self.params()]
                self.expect(";")
            elif self.accept("property"):
                name = self.ident()
                self.expect(":")
                thing.properties[name] = self.type_ref()
                if self.accept("="):
                    self.expr(thing)
            elif self.at("provided") or self.at("required"):
                required = self._advance().text == "required"
                self.expect("port")
                name = self.ident()
                if required:
                    thing.required.add(name)
                self.expect("{")
                sends = self.name_list("sends", thing)
                receives = self.name_list("receives", thing)
                self.expect("}")
                thing.ports[name] = (sends, receives)
            elif self.accept("function"):
                thing.functions.append(self.ident())
                self.params()
                if self.accept(":"):
                    self.type_ref()
                self.block(thing)
            elif self.at("statechart"):
                self.statechart(thing)
            else:
                raise SubsetError(f"unexpected {self.tok.text or 'end of file'!r} in thing", self.tok.line)
        self.out.things.append(thing)

    def params(self) -> List[Tuple[str, str]]:
        self.expect("(")
        out = []
        if not self.at(")"):
            while True:
                name = self.ident()
                self.expect(":")
                out.append((name, self.type_ref()))
                if not self.accept(","):
                    break
        self.expect(")")
        return out

    def name_list(self, keyword: str, thing: Thing) -> List[str]:
        names: List[str] = []
        if self.accept(keyword):
            while True:
                line = self.tok.line
                names.append(self.ident())
                thing.refs.append((line, "message", names[-1]))
                if not self.accept(","):
                    break
        return names

    def statechart(self, thing: Thing) -> None:
        self.expect("statechart")
        self.ident()
        self.expect("init")
        line = self.tok.line
        thing.refs.append((line, "state", self.ident()))
        self.expect("{")
        while not self.accept("}"):
            self.expect("state")
            thing.states.append(self.ident())
            self.expect("{")
            if self.accept("on"):
                if self.accept("entry"):
                    self.block(thing)
                    if self.accept("on"):
                        self.expect("exit")
                        self.block(thing)
                else:
                    self.expect("exit")
                    self.block(thing)
            while self.accept("internal"):
                self.handler_tail(thing)
                self.expect("action")
                self.block(thing)
            while self.accept("transition"):
                self.expect("->")
                line = self.tok.line
                thing.refs.append((line, "state", self.ident()))
                self.handler_tail(thing)
                if self.accept("action"):
                    self.block(thing)
            self.expect("}")

    def handler_tail(self, thing: Thing) -> None:
        if self.accept("event"):
            line = self.tok.line
            thing.refs.append((line, "port", self.ident()))
            self.expect("?")
            thing.refs.append((line, "message", self.ident()))
        if self.accept("guard"):
            self.expect("(")
            self.expr(thing)
            self.expect(")")

    def block(self, thing: Thing) -> None:
        self.expect("do")
        while not self.accept("end"):
            line = self.tok.line
            target = self.ident()
            if self.accept("!"):
                thing.refs.append((line, "port", target))
                thing.refs.append((line, "message", self.ident()))
                self.expect("(")
                if not self.at(")"):
                    self.expr(thing)
                    while self.accept(","):
                        self.expr(thing)
                self.expect(")")
            else:
                thing.refs.append((line, "property", target))
                self.expect("=")
                self.expr(thing)

    # expressions: or > and > not > comparison > additive > multiplicative > unary
    def expr(self, thing: Thing) -> None:
        self.and_expr(thing)
        while self.accept("or"):
            self.and_expr(thing)

    def and_expr(self, thing: Thing) -> None:
        self.not_expr(thing)
        while self.accept("and"):
            self.not_expr(thing)

    def not_expr(self, thing: Thing) -> None:
        if self.accept("not"):
            self.not_expr(thing)
            return
        self.additive(thing)
        if any(self.at(op) for op in ("==", "!=", "<", "<=", ">", ">=")):
            self._advance()
            self.additive(thing)

    def additive(self, thing: Thing) -> None:
        self.term(thing)
        while self.at("+") or self.at("-"):
            self._advance()
            self.term(thing)

    def term(self, thing: Thing) -> None:
        self.unary(thing)
        while self.at("*") or self.at("/"):
            self._advance()
            self.unary(thing)

    def unary(self, thing: Thing) -> None:
        if self.accept("-"):
            self.unary(thing)
            return
        tok = self.tok
        if tok.kind in ("int", "float", "string") or self.at("true") or self.at("false"):
            self._advance()
        elif tok.kind == "ident":
            thing.refs.append((tok.line, "property", self._advance().text))
        elif self.accept("("):
            self.expr(thing)
            self.expect(")")
        else:
            raise SubsetError(f"expected an expression, found {tok.text or 'end of file'!r}", tok.line)

    def configuration(self) -> None:
        self.expect("configuration")
        self.out.configurations.append(self.ident())
        self.expect("{")
        while not self.accept("}"):
            if self.accept("instance"):
                name = self.ident()
                self.expect(":")
                self.out.instances[name] = self.ident()
            else:
                line = self.expect("connector").line
                a, _, ap = self.ident(), self.expect("."), self.ident()
                self.expect("=>")
                b, _, bp = self.ident(), self.expect("."), self.ident()
                self.out.connectors.append((line, a, ap, b, bp))


def parse_unit(text: str) -> UnitSummary:
    return _Parser(text).unit()


def check_unit(text: str) -> List[str]:
    """Return problems found in one ThingML file (empty list when it conforms)."""
    try:
        parse_unit(text)
    except SubsetError as exc:
        return [str(exc)]
    return []


def _resolve_thing(thing: Thing, fragments: Dict[str, Thing], types: Set[str]) -> Iterable[str]:
    messages = dict(thing.messages)
    for inc in thing.includes:
        if inc not in fragments:
            yield f"thing {thing.name}: unknown fragment {inc!r}"
            continue
        messages.update(fragments[inc].messages)
    for line, kind, name in thing.refs:
        known = {
            "message": messages,
            "state": thing.states,
            "port": thing.ports,
            "property": thing.properties,
        }[kind]
        if name not in known:
            yield f"line {line}: thing {thing.name}: unknown {kind} {name!r}"
    for port, (sends, receives) in thing.ports.items():
        if len(set(sends)) != len(sends) or len(set(receives)) != len(receives):
            yield f"thing {thing.name}: port {port} lists a message twice"


def check_units(units) -> Dict[str, List[str]]:
    """Check a generated set of units; maps each file name to its problems.

    Beyond syntax this resolves imports, type names, messages, ports,
    properties, states and configuration references across the set.
    """
    problems: Dict[str, List[str]] = {}
    summaries: Dict[str, UnitSummary] = {}
    for unit in units:
        try:
            summaries[unit.file_name] = parse_unit(unit.text)
            problems[unit.file_name] = []
        except SubsetError as exc:
            problems[unit.file_name] = [str(exc)]

    types = set()
    fragments: Dict[str, Thing] = {}
    things: Dict[str, Thing] = {}
    for summary in summaries.values():
        types.update(summary.types)
        for thing in summary.things:
            (fragments if thing.fragment else things)[thing.name] = thing

    for file_name, summary in summaries.items():
        issues = problems[file_name]
        issues += [f"unknown import {imp!r}" for imp in summary.imports if imp not in summaries]
        issues += [f"line {line}: unknown type {name!r}" for line, name in summary.type_refs
                   if name not in types]
        for thing in summary.things:
            issues.extend(_resolve_thing(thing, fragments, types))
        for inst, type_name in summary.instances.items():
            if type_name not in things:
                issues.append(f"instance {inst}: unknown thing {type_name!r}")
        for line, a, ap, b, bp in summary.connectors:
            for inst, port, want_required in ((a, ap, True), (b, bp, False)):
                thing = things.get(summary.instances.get(inst, ""))
                if thing is None:
                    issues.append(f"line {line}: connector end {inst}.{port}: unknown instance")
                elif port not in thing.ports:
                    issues.append(f"line {line}: connector end {inst}.{port}: unknown port")
                elif (port in thing.required) != want_required:
                    side = "required" if want_required else "provided"
                    issues.append(f"line {line}: connector end {inst}.{port} must be a {side} port")
    return problems


def first_problem(units) -> Optional[str]:
    for name, issues in check_units(units).items():
        if issues:
            return f"{name}: {issues[0]}"
    return None
