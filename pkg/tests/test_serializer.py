import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iotforge import model as m
from iotforge.parser import parse_expression, parse_model
from iotforge.serializer import format_expr, format_ms, serialize_model

from support import MODEL_FIXTURES

RESERVED = {"and", "or", "not", "true", "false", "entry", "exit", "internal"}

idents = st.from_regex(r"[a-z][A-Za-z0-9_]{0,7}", fullmatch=True).filter(lambda s: s not in RESERVED)
type_names = st.sampled_from(["int", "float", "bool", "string"])


def literals():
    return st.one_of(
        st.builds(m.Literal, st.just("int"), st.integers(-10**6, 10**6)),
        st.builds(m.Literal, st.just("float"),
                  st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)),
        st.builds(m.Literal, st.just("bool"), st.booleans()),
        st.builds(m.Literal, st.just("string"), st.text(st.characters(blacklist_categories=("Cs",),
                                                                      blacklist_characters="\r"), max_size=6)),
    )


def _extend(children):
    ops = sorted({*m.COMPARISON_OPS, *m.ARITHMETIC_OPS, *m.BOOLEAN_OPS})
    non_literal = children.filter(lambda e: not isinstance(e, m.Literal))
    return st.one_of(
        st.builds(m.Binary, st.sampled_from(ops), children, children),
        st.builds(m.Unary, st.just("not"), children),
        # unary minus on a number literal is folded into the literal by the parser
        st.builds(m.Unary, st.just("-"), non_literal),
    )


expressions = st.recursive(st.one_of(literals(), st.builds(m.Name, idents)), _extend, max_leaves=12)


@pytest.mark.parametrize("path", MODEL_FIXTURES, ids=lambda p: p.name)
def test_round_trip_fixture(path):
    model = parse_model(path.read_text(encoding="utf-8"))
    text = serialize_model(model)
    again = parse_model(text)
    assert again == model
    assert serialize_model(again) == text


def test_empty_model_canonical_text():
    assert serialize_model(parse_model("system S { }")) == "system S {\n}\n"


def test_guard_spacing_is_canonical():
    model = parse_model("system S { element E { property temp: float; statemachine {"
                        " initial state A { entry X exit X } transition A -> A [temp>40.0]"
                        " event X generic does Y action Y set temp = temp } } }")
    assert "transition A -> A [temp > 40.0]" in serialize_model(model)


def test_minimal_parentheses():
    assert format_expr(parse_expression("(a + b) * c")) == "(a + b) * c"
    assert format_expr(parse_expression("a + (b * c)")) == "a + b * c"
    assert format_expr(parse_expression("a - (b - c)")) == "a - (b - c)"
    assert format_expr(parse_expression("not (a and b)")) == "not (a and b)"
    assert format_expr(parse_expression("(a < b) == c")) == "(a < b) == c"


def test_format_ms():
    assert [format_ms(us) for us in (200_000, 500, 12_250, 1)] == ["200", "0.5", "12.25", "0.001"]


@settings(max_examples=300, deadline=None)
@given(expressions)
def test_expression_print_parse_fixpoint(expr):
    text = format_expr(expr)
    assert parse_expression(text) == expr
    assert format_expr(parse_expression(text)) == text


@st.composite
def models(draw):
    names = draw(st.lists(idents, min_size=6, max_size=12, unique=True))
    name_iter = iter(names)
    payload = m.Payload(next(name_iter).capitalize(), tuple(
        m.Attribute(n, t) for n, t in draw(st.lists(st.tuples(idents, type_names), max_size=3))))
    props = tuple(
        m.Property(n, t, draw(st.one_of(st.none(), literals())))
        for n, t in draw(st.lists(st.tuples(idents, type_names), max_size=3)))
    state_a, state_b, event, action = (next(name_iter) for _ in range(4))
    sm = m.StateMachine(
        states=(m.State(state_a, True, event, event), m.State(state_b, False, event, None, (event,))),
        transitions=(m.Transition(state_a, state_b, event, draw(st.one_of(st.none(), expressions))),),
        events=(m.Event(event, draw(st.sampled_from(sorted(m.EVENT_KINDS))), "p", action),),
        actions=(m.Action(action, "generic", None, m.Assignment("x", draw(expressions))),),
    )
    element = m.Component(next(name_iter).capitalize(), m.ELEMENT, draw(st.booleans()), props,
                          (m.Port("p", draw(st.sampled_from([m.PROVIDED, m.REQUIRED, m.BIDIRECTIONAL])), "I"),),
                          (), (), sm)
    rt = m.RTAnnotation("a.b.c", draw(st.sampled_from([m.PERIODIC, m.SPORADIC])),
                        draw(st.integers(1, 10**7)), draw(st.integers(1, 10**7)),
                        draw(st.integers(1, 10**7)), draw(st.integers(-5, 50)))
    return m.Model("Sys", payloads=(payload,), elements=(element,), rt_annotations=(rt,),
                   allocations=(m.Allocation("a.b", m.CoreRef("P", "c0")),),
                   hardware=m.Hardware((m.Processor("P", (m.Core("c0"),)),)))


@settings(max_examples=150, deadline=None)
@given(models())
def test_model_serialize_parse_fixpoint(model):
    text = serialize_model(model)
    assert parse_model(text) == model
