"""Lexer and recursive-descent parser for ``.ciot`` model files.

The grammar is keyword-block structured and newline-insensitive; see
``docs/grammar.ebnf``. Keywords are contextual, so most of them remain
usable as names. On a syntax error the parser records a diagnostic, skips
the rest of the enclosing top-level declaration and carries on, so one run
reports errors from independent blocks.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import List, Optional, Tuple

from . import model as m
from .diagnostics import ERROR, Diagnostic

E_LEX = "E_LEX"
E_SYNTAX = "E_SYNTAX"

DSL_VERSION = 1

TOP_KEYWORDS = frozenset(
    {"payload", "interface", "element", "board", "entity", "powersource",
     "hardware", "allocate", "rt"}
)
STATE_ITEMS = frozenset({"entry", "exit", "internal"})
EXPR_KEYWORDS = frozenset({"and", "or", "not", "true", "false"})

_PUNCT2 = ("->", "==", "!=", "<=", ">=")
_PUNCT1 = "{}()[]:;,.=<>+-*/"


@dataclass(frozen=True)
class SourceFile:
    path: str
    text: str

    @classmethod
    def read(cls, path) -> "SourceFile":
        """Read a UTF-8 file; decoding failures surface as ``UnicodeDecodeError``."""
        data = Path(path).read_bytes()
        return cls(str(path), data.decode("utf-8"))


class ModelSyntaxError(Exception):
    def __init__(self, diagnostics: List[Diagnostic]):
        self.diagnostics = diagnostics
        first = diagnostics[0]
        super().__init__(f"{first.line}:{first.column}: {first.message}")


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT INT FLOAT STRING OP EOF
    text: str
    line: int
    col: int

    @property
    def loc(self) -> Tuple[int, int]:
        return (self.line, self.col)


def tokenize(text: str) -> Tuple[List[Token], List[Diagnostic]]:
    tokens: List[Token] = []
    diags: List[Diagnostic] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def bump(count: int) -> None:
        nonlocal i, line, col
        for _ in range(count):
            if text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        ch = text[i]
        if ch in " \t\r\n\f":
            bump(1)
        elif text.startswith("//", i):
            while i < n and text[i] != "\n":
                bump(1)
        elif ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_") and text[j].isascii():
                j += 1
            if j == i:  # non-ASCII letter
                diags.append(Diagnostic(ERROR, E_LEX, f"unexpected character {ch!r}", line, col))
                bump(1)
                continue
            tokens.append(Token("IDENT", text[i:j], line, col))
            bump(j - i)
        elif ch.isdigit() and ch.isascii():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            kind = "INT"
            if j + 1 < n and text[j] == "." and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
                kind = "FLOAT"
            tokens.append(Token(kind, text[i:j], line, col))
            bump(j - i)
        elif ch == '"':
            start_line, start_col = line, col
            j = i + 1
            buf = []
            closed = False
            while j < n and text[j] != "\n":
                c = text[j]
                if c == "\\" and j + 1 < n:
                    buf.append({"n": "\n", "t": "\t"}.get(text[j + 1], text[j + 1]))
                    j += 2
                    continue
                if c == '"':
                    closed = True
                    break
                buf.append(c)
                j += 1
            if not closed:
                diags.append(Diagnostic(ERROR, E_LEX, "unterminated string literal",
                                        start_line, start_col))
                bump(j - i)
                continue
            tokens.append(Token("STRING", "".join(buf), start_line, start_col))
            bump(j + 1 - i)
        else:
            two = text[i:i + 2]
            if two in _PUNCT2:
                tokens.append(Token("OP", two, line, col))
                bump(2)
            elif ch in _PUNCT1:
                tokens.append(Token("OP", ch, line, col))
                bump(1)
            else:
                diags.append(Diagnostic(ERROR, E_LEX, f"unexpected character {ch!r}", line, col))
                bump(1)
    tokens.append(Token("EOF", "", line, col))
    return tokens, diags


class _Failure(Exception):
    def __init__(self, diag: Diagnostic):
        self.diag = diag


class Parser:
    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.pos = 0
        self.diags: List[Diagnostic] = []

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def at(self, text: str) -> bool:
        tok = self.tok
        return tok.text == text and tok.kind in ("IDENT", "OP")

    def accept(self, text: str) -> Optional[Token]:
        if self.at(text):
            return self.advance()
        return None

    def fail(self, message: str, tok: Optional[Token] = None) -> _Failure:
        tok = tok or self.tok
        return _Failure(Diagnostic(ERROR, E_SYNTAX, message, tok.line, tok.col))

    def _describe(self, tok: Token) -> str:
        if tok.kind == "EOF":
            return "end of file"
        if tok.kind == "STRING":
            return "string literal"
        return repr(tok.text)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.fail(f"expected {text!r}, found {self._describe(self.tok)}")
        return self.advance()

    def ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "IDENT":
            raise self.fail(f"expected {what}, found {self._describe(self.tok)}")
        return self.advance()

    def path(self, what: str = "path") -> Tuple[str, Token]:
        first = self.ident(what)
        parts = [first.text]
        while self.at("."):
            self.advance()
            parts.append(self.ident(what).text)
        return ".".join(parts), first

    # -- file --------------------------------------------------------------

    def parse_file(self) -> Optional[m.Model]:
        try:
            self._header()
            start = self.expect("system")
            name = self.ident("system name").text
            self.expect("{")
        except _Failure as exc:
            self.diags.append(exc.diag)
            return None

        decls = {"payloads": [], "interfaces": [], "element": [], "board": [],
                 "entity": [], "processors": [], "allocations": [], "rt": []}
        while not self.at("}"):
            if self.tok.kind == "EOF":
                self.diags.append(self.fail("expected '}' closing the system block").diag)
                return None
            decl_start = self.pos
            try:
                self._decl(decls)
            except _Failure as exc:
                self.diags.append(exc.diag)
                if not self._recover(decl_start):
                    return None
        self.advance()
        if self.tok.kind != "EOF":
            self.diags.append(self.fail(
                f"unexpected {self._describe(self.tok)} after the system block").diag)
            return None
        return m.Model(
            name=name,
            payloads=tuple(decls["payloads"]),
            interfaces=tuple(decls["interfaces"]),
            elements=tuple(decls["element"]),
            boards=tuple(decls["board"]),
            entities=tuple(decls["entity"]),
            hardware=m.Hardware(tuple(decls["processors"])),
            allocations=tuple(decls["allocations"]),
            rt_annotations=tuple(decls["rt"]),
            loc=start.loc,
        )

    def _header(self) -> None:
        if not (self.at("dsl") and self.peek().text == "-"):
            return
        self.advance()
        self.expect("-")
        self.expect("version")
        tok = self.tok
        if tok.kind != "INT":
            raise self.fail("expected a version number")
        self.advance()
        if int(tok.text) != DSL_VERSION:
            raise self.fail(f"unsupported dsl-version {tok.text} (expected {DSL_VERSION})", tok)

    def _recover(self, start: int) -> bool:
        """Skip past the top-level declaration that began at ``start``.

        Returns False when the rest of the file cannot be resynchronised.
        """
        depth = 0
        i = start
        # the failing token may be the declaration keyword itself
        if self.tokens[i].kind == "IDENT" and self.tokens[i].text in TOP_KEYWORDS:
            i += 1
        while True:
            tok = self.tokens[i]
            if tok.kind == "EOF":
                self.pos = i
                return False
            if depth == 0 and tok.kind == "IDENT" and tok.text in TOP_KEYWORDS:
                break
            if tok.kind == "OP" and tok.text == "{":
                depth += 1
            elif tok.kind == "OP" and tok.text == "}":
                if depth == 0:
                    break  # end of the system block
                depth -= 1
                if depth == 0:
                    i += 1
                    break
            i += 1
        self.pos = i
        return True

    def _decl(self, decls) -> None:
        tok = self.tok
        if tok.kind != "IDENT" or tok.text not in TOP_KEYWORDS:
            raise self.fail(f"expected a declaration, found {self._describe(tok)}")
        kw = tok.text
        if kw == "payload":
            decls["payloads"].append(self._payload())
        elif kw == "interface":
            decls["interfaces"].append(self._interface())
        elif kw in ("element", "board", "entity", "powersource"):
            comp = self._component()
            decls[comp.kind].append(comp)
        elif kw == "hardware":
            decls["processors"].extend(self._hardware())
        elif kw == "allocate":
            decls["allocations"].append(self._allocation())
        else:
            decls["rt"].append(self._rt())

    # -- declarations ------------------------------------------------------

    def _payload(self) -> m.Payload:
        kw = self.expect("payload")
        name = self.ident("payload name").text
        self.expect("{")
        attrs = []
        while not self.at("}"):
            attr_tok = self.ident("attribute name")
            self.expect(":")
            attrs.append(m.Attribute(attr_tok.text, self.ident("type").text, attr_tok.loc))
            if not self.accept(","):
                break
        self.expect("}")
        return m.Payload(name, tuple(attrs), kw.loc)

    def _interface(self) -> m.Interface:
        kw = self.expect("interface")
        name = self.ident("interface name").text
        self.expect("{")
        ops = []
        while not self.at("}"):
            op_kw = self.expect("op")
            op_name = self.ident("operation name").text
            self.expect("(")
            params = []
            while not self.at(")"):
                p = self.ident("parameter name")
                self.expect(":")
                params.append(m.Param(p.text, self.ident("type").text, p.loc))
                if not self.accept(","):
                    break
            self.expect(")")
            ret = None
            if self.accept("->"):
                ret = self.ident("return type").text
            ops.append(m.Operation(op_name, tuple(params), ret, op_kw.loc))
        self.expect("}")
        return m.Interface(name, tuple(ops), kw.loc)

    def _component(self) -> m.Component:
        first = self.tok
        power = bool(self.accept("powersource"))
        kind_tok = self.ident()
        if kind_tok.text not in (m.ELEMENT, m.BOARD, m.ENTITY):
            raise self.fail("expected 'element', 'board' or 'entity'", kind_tok)
        if power and kind_tok.text != m.ELEMENT:
            raise self.fail("only an element can be a power source", kind_tok)
        name = self.ident("component name").text
        self.expect("{")
        props, ports, parts, conns = [], [], [], []
        sm = None
        while not self.at("}"):
            tok = self.tok
            if self.accept("property"):
                p = self.ident("property name")
                self.expect(":")
                ptype = self.ident("type").text
                init = None
                if self.accept("="):
                    init = self._literal()
                self.expect(";")
                props.append(m.Property(p.text, ptype, init, tok.loc))
            elif tok.text in ("provides", "requires", "bidir") and tok.kind == "IDENT":
                self.advance()
                self.expect("port")
                pname = self.ident("port name").text
                self.expect(":")
                iface = self.ident("interface name").text
                self.expect(";")
                direction = {"provides": m.PROVIDED, "requires": m.REQUIRED,
                             "bidir": m.BIDIRECTIONAL}[tok.text]
                ports.append(m.Port(pname, direction, iface, tok.loc))
            elif self.accept("part"):
                pname = self.ident("part name").text
                self.expect(":")
                ctype = self.ident("component type").text
                self.expect(";")
                parts.append(m.Part(pname, ctype, tok.loc))
            elif self.accept("connect"):
                src = self._port_ref()
                self.expect("->")
                dst = self._port_ref()
                self.expect(";")
                conns.append(m.Connection(src, dst, tok.loc))
            elif self.at("statemachine"):
                if sm is not None:
                    raise self.fail("a component has at most one statemachine")
                sm = self._statemachine()
            else:
                raise self.fail(f"unexpected {self._describe(tok)} in {kind_tok.text} body")
        self.expect("}")
        return m.Component(name, kind_tok.text, power, tuple(props), tuple(ports),
                           tuple(parts), tuple(conns), sm, first.loc)

    def _port_ref(self) -> m.PortRef:
        first = self.ident("port").text
        if self.accept("."):
            return m.PortRef(first, self.ident("port").text)
        return m.PortRef(None, first)

    def _statemachine(self) -> m.StateMachine:
        kw = self.expect("statemachine")
        self.expect("{")
        states, transitions, events, actions = [], [], [], []
        while not self.at("}"):
            tok = self.tok
            if self.at("initial") or self.at("state"):
                states.append(self._state())
            elif self.accept("transition"):
                src = self.ident("state name").text
                self.expect("->")
                dst = self.ident("state name").text
                trigger = guard = None
                if self.accept("on"):
                    trigger = self.ident("event name").text
                if self.accept("["):
                    guard = self.expression()
                    self.expect("]")
                transitions.append(m.Transition(src, dst, trigger, guard, tok.loc))
            elif self.accept("event"):
                name = self.ident("event name").text
                kind = self.ident("event kind")
                if kind.text not in m.EVENT_KINDS:
                    raise self.fail("expected 'incoming', 'outgoing' or 'generic'", kind)
                port = None
                if self.accept("via"):
                    port = self.ident("port name").text
                self.expect("does")
                action = self.ident("action name").text
                events.append(m.Event(name, kind.text, port, action, tok.loc))
            elif self.accept("action"):
                name = self.ident("action name").text
                if self.accept("send"):
                    actions.append(m.Action(name, "send", self.ident("payload").text, None, tok.loc))
                elif self.accept("receive"):
                    actions.append(m.Action(name, "receive", self.ident("payload").text, None, tok.loc))
                elif self.accept("set"):
                    prop = self.ident("property name").text
                    self.expect("=")
                    value = self.expression()
                    actions.append(m.Action(name, "generic", None, m.Assignment(prop, value), tok.loc))
                else:
                    raise self.fail("expected 'send', 'receive' or 'set'")
            else:
                raise self.fail(f"unexpected {self._describe(tok)} in statemachine")
        self.expect("}")
        return m.StateMachine(tuple(states), tuple(transitions), tuple(events),
                              tuple(actions), kw.loc)

    def _state(self) -> m.State:
        first = self.tok
        initial = bool(self.accept("initial"))
        self.expect("state")
        name = self.ident("state name").text
        self.expect("{")
        entry = exit_ = None
        internal: List[str] = []
        seen = set()
        while not self.at("}"):
            item = self.tok
            if item.kind != "IDENT" or item.text not in STATE_ITEMS:
                raise self.fail("expected 'entry', 'exit' or 'internal'")
            if item.text in seen:
                raise self.fail(f"duplicate {item.text!r} in state {name}")
            seen.add(item.text)
            self.advance()
            if item.text == "entry":
                entry = self.ident("event name").text
            elif item.text == "exit":
                exit_ = self.ident("event name").text
            else:
                internal.append(self.ident("event name").text)
                while self.tok.kind == "IDENT" and self.tok.text not in STATE_ITEMS:
                    internal.append(self.advance().text)
        self.expect("}")
        return m.State(name, initial, entry, exit_, tuple(internal), first.loc)

    def _hardware(self) -> List[m.Processor]:
        self.expect("hardware")
        self.expect("{")
        procs = []
        while not self.at("}"):
            kw = self.expect("processor")
            name = self.ident("processor name").text
            self.expect("{")
            cores = []
            while not self.at("}"):
                core_kw = self.expect("core")
                cores.append(m.Core(self.ident("core name").text, core_kw.loc))
            self.expect("}")
            procs.append(m.Processor(name, tuple(cores), kw.loc))
        self.expect("}")
        return procs

    def _allocation(self) -> m.Allocation:
        kw = self.expect("allocate")
        instance, _ = self.path("instance path")
        self.expect("->")
        proc = self.ident("processor name").text
        self.expect(".")
        core = self.ident("core name").text
        return m.Allocation(instance, m.CoreRef(proc, core), kw.loc)

    def _rt(self) -> m.RTAnnotation:
        kw = self.expect("rt")
        target, first = self.path("operation path")
        if "." not in target:
            raise self.fail("rt target must be an instance path followed by an operation", first)
        self.expect("{")
        fields = {}
        while not self.at("}"):
            tok = self.ident("timing property")
            key = tok.text
            if key in ("periodic", "sporadic"):
                slot = "pattern"
            elif key in ("wcet", "deadline", "priority"):
                slot = key
            else:
                raise self.fail(f"unknown timing property {key!r}", tok)
            if slot in fields:
                raise self.fail(f"duplicate {slot} in rt block", tok)
            if key == "priority":
                fields[slot] = self._signed_int()
            elif slot == "pattern":
                fields[slot] = (key, self._time())
            else:
                fields[slot] = self._time()
        missing = [s for s in ("pattern", "wcet", "deadline", "priority") if s not in fields]
        if missing:
            label = "periodic/sporadic" if missing[0] == "pattern" else missing[0]
            raise self.fail(f"rt block for {target} is missing {label}")
        self.expect("}")
        pattern, period = fields["pattern"]
        return m.RTAnnotation(target, pattern, period, fields["wcet"], fields["deadline"],
                              fields["priority"], kw.loc)

    def _signed_int(self) -> int:
        neg = bool(self.accept("-"))
        tok = self.tok
        if tok.kind != "INT":
            raise self.fail(f"expected an integer, found {self._describe(tok)}")
        self.advance()
        return -int(tok.text) if neg else int(tok.text)

    def _time(self) -> int:
        neg = bool(self.accept("-"))
        tok = self.tok
        if tok.kind not in ("INT", "FLOAT"):
            raise self.fail(f"expected a duration, found {self._describe(tok)}")
        self.advance()
        self.expect("ms")
        try:
            us = Decimal(tok.text) * 1000
        except InvalidOperation:  # pragma: no cover - lexer guarantees digits
            raise self.fail("malformed duration", tok)
        if us != us.to_integral_value():
            raise self.fail("durations resolve to whole microseconds", tok)
        return -int(us) if neg else int(us)

    # -- literals and expressions -----------------------------------------

    def _literal(self) -> m.Literal:
        neg = bool(self.accept("-"))
        tok = self.tok
        if tok.kind == "INT":
            self.advance()
            return m.Literal("int", -int(tok.text) if neg else int(tok.text))
        if tok.kind == "FLOAT":
            self.advance()
            return m.Literal("float", -float(tok.text) if neg else float(tok.text))
        if neg:
            raise self.fail("expected a number after '-'")
        if tok.kind == "STRING":
            self.advance()
            return m.Literal("string", tok.text)
        if tok.kind == "IDENT" and tok.text in ("true", "false"):
            self.advance()
            return m.Literal("bool", tok.text == "true")
        raise self.fail(f"expected a literal, found {self._describe(tok)}")

    def expression(self) -> m.Expr:
        return self._or()

    def _or(self) -> m.Expr:
        left = self._and()
        while self.tok.kind == "IDENT" and self.tok.text == "or":
            self.advance()
            left = m.Binary("or", left, self._and())
        return left

    def _and(self) -> m.Expr:
        left = self._not()
        while self.tok.kind == "IDENT" and self.tok.text == "and":
            self.advance()
            left = m.Binary("and", left, self._not())
        return left

    def _not(self) -> m.Expr:
        if self.tok.kind == "IDENT" and self.tok.text == "not":
            self.advance()
            return m.Unary("not", self._not())
        return self._comparison()

    def _comparison(self) -> m.Expr:
        left = self._additive()
        if self.tok.kind == "OP" and self.tok.text in m.COMPARISON_OPS:
            op = self.advance().text
            right = self._additive()
            if self.tok.kind == "OP" and self.tok.text in m.COMPARISON_OPS:
                raise self.fail("comparisons cannot be chained")
            return m.Binary(op, left, right)
        return left

    def _additive(self) -> m.Expr:
        left = self._multiplicative()
        while self.tok.kind == "OP" and self.tok.text in ("+", "-"):
            op = self.advance().text
            left = m.Binary(op, left, self._multiplicative())
        return left

    def _multiplicative(self) -> m.Expr:
        left = self._unary()
        while self.tok.kind == "OP" and self.tok.text in ("*", "/"):
            op = self.advance().text
            left = m.Binary(op, left, self._unary())
        return left

    def _unary(self) -> m.Expr:
        if self.tok.kind == "OP" and self.tok.text == "-":
            self.advance()
            tok = self.tok
            if tok.kind == "INT":
                self.advance()
                return m.Literal("int", -int(tok.text))
            if tok.kind == "FLOAT":
                self.advance()
                return m.Literal("float", -float(tok.text))
            return m.Unary("-", self._unary())
        return self._atom()

    def _atom(self) -> m.Expr:
        tok = self.tok
        if tok.kind == "OP" and tok.text == "(":
            self.advance()
            inner = self.expression()
            self.expect(")")
            return inner
        if tok.kind in ("INT", "FLOAT", "STRING") or tok.text in ("true", "false"):
            return self._literal()
        if tok.kind == "IDENT" and tok.text not in EXPR_KEYWORDS:
            self.advance()
            return m.Name(tok.text, tok.loc)
        raise self.fail(f"expected an expression, found {self._describe(tok)}")


def _dedupe(diags: List[Diagnostic]) -> List[Diagnostic]:
    seen = set()
    out = []
    for d in diags:
        if d not in seen:
            seen.add(d)
            out.append(d)
    return out


def parse_model(source, path: str = "<input>") -> m.Model:
    """Parse model text (or a :class:`SourceFile`) into a :class:`Model`.

    Raises :class:`ModelSyntaxError` carrying every lexical and syntax
    diagnostic found. Name resolution is left to the validator.
    """
    text = source.text if isinstance(source, SourceFile) else source
    tokens, lex_diags = tokenize(text)
    parser = Parser(tokens)
    result = parser.parse_file()
    diags = _dedupe(sorted(lex_diags + parser.diags, key=lambda d: (d.line, d.column)))
    if diags:
        raise ModelSyntaxError(diags)
    assert result is not None
    return result


def parse_expression(text: str) -> m.Expr:
    tokens, lex_diags = tokenize(text)
    if lex_diags:
        raise ModelSyntaxError(lex_diags)
    parser = Parser(tokens)
    try:
        expr = parser.expression()
        if parser.tok.kind != "EOF":
            raise parser.fail(f"unexpected {parser._describe(parser.tok)} after expression")
    except _Failure as exc:
        raise ModelSyntaxError([exc.diag]) from None
    return expr
