from dataclasses import replace

import pytest

from iotforge import model as m
from iotforge.parser import parse_expression, parse_model
from iotforge.validator import RULES, GuardTypeError, typecheck_guard, validate

from support import EXTRA_SEEDED, MODEL_FIXTURES, SEEDED, WARNING_FIXTURES, load

# codes a dangling reference can produce once its target is gone
RESOLUTION_CODES = {"V_UNRESOLVED", "V_RT_TARGET", "V_ALLOC_PATH", "V_ALLOC_CORE", "V_ALLOC_MISSING"}

BASELINE_RULES = {
    "V_STATE_EVENTS", "V_PORT_MATCH", "V_ACTION_DIRECTION", "V_EVENT_PORT", "V_SM_INITIAL",
    "V_GUARD_TYPE", "V_ALLOC_MISSING", "V_ALLOC_CORE", "V_RT_VALUES", "V_ENTITY_PARTS",
    "V_PAYLOAD_CYCLE", "V_DUP_NAME",
}


def codes(model):
    return [d.code for d in validate(model)]


@pytest.mark.parametrize("name", ["clean", "minimal", "safety", "safety_fixed"])
def test_valid_fixtures_are_clean(name):
    assert validate(load(name)) == []


@pytest.mark.parametrize("name,code", sorted({**SEEDED, **EXTRA_SEEDED}.items()))
def test_seeded_fixture_triggers_only_its_rule(name, code):
    diags = validate(load(name))
    assert [d.code for d in diags] == [code]
    assert diags[0].is_error


@pytest.mark.parametrize("name,code", sorted(WARNING_FIXTURES.items()))
def test_warning_fixture(name, code):
    diags = validate(load(name))
    assert [(d.code, d.severity) for d in diags] == [(code, "warning")]


def test_every_baseline_rule_has_a_seeded_fixture():
    assert set(SEEDED.values()) == BASELINE_RULES
    assert BASELINE_RULES <= set(RULES)
    assert all(code == rule.code for code, rule in RULES.items())


def test_bad_state_names_idle():
    (diag,) = validate(load("bad_state"))
    assert "Idle" in diag.message
    assert diag.line == 15


def test_all_violations_reported():
    model = load("clean")
    probe = model.component("Probe")
    sm = probe.statemachine
    broken_states = (replace(sm.states[0], on_exit=None), replace(sm.states[1], initial=True))
    broken = replace(model, elements=(replace(probe, statemachine=replace(sm, states=broken_states)),),
                     allocations=())
    assert sorted(codes(broken)) == ["V_ALLOC_MISSING", "V_SM_INITIAL", "V_STATE_EVENTS"]


def test_diagnostics_follow_source_order():
    for path in MODEL_FIXTURES:
        diags = validate(parse_model(path.read_text()))
        assert [(d.line, d.column) for d in diags] == sorted((d.line, d.column) for d in diags)


def test_validate_is_deterministic():
    model = load("bad_payload_cycle")
    assert validate(model) == validate(model)


def _removals(model):
    for field in ("payloads", "interfaces", "elements", "boards", "entities",
                  "allocations", "rt_annotations"):
        items = getattr(model, field)
        for i in range(len(items)):
            yield f"{field}[{i}]", replace(model, **{field: items[:i] + items[i + 1:]})
    if model.hardware.processors:
        yield "hardware", replace(model, hardware=m.Hardware())


@pytest.mark.parametrize("path", MODEL_FIXTURES, ids=lambda p: p.name)
def test_removing_a_declaration_only_adds_resolution_errors(path):
    model = parse_model(path.read_text())
    before = set(validate(model))
    for label, reduced in _removals(model):
        added = {d.code for d in validate(reduced) if d not in before}
        assert added <= RESOLUTION_CODES, (label, added)


def test_port_match_interface_mismatch():
    model = parse_model("""system S {
        interface A { } interface B { }
        element E { provides port p: A; }
        board X { requires port q: B; part e: E; connect e.p -> q; }
    }""")
    assert codes(model) == ["V_PORT_MATCH"]


def test_bidirectional_matches_either_side():
    model = parse_model("""system S {
        interface A { }
        element E { bidir port p: A; }
        board X { requires port q: A; provides port r: A; part e: E; part f: E;
                  connect e.p -> q; connect f.p -> r; }
    }""")
    assert codes(model) == []


def test_entity_may_hold_power_source():
    model = parse_model("""system S {
        powersource element Cell { }
        board B { }
        entity E { part b: B; part c: Cell; }
    }""")
    assert codes(model) == []


def test_rt_overload_warning():
    model = parse_model("""system S {
        interface I { op a() }
        element W { provides port p: I; }
        board B { part w: W; }
        entity E { part b: B; }
        hardware { processor P { core c0 } }
        allocate e.b -> P.c0
        rt e.b.w.a { periodic 10 ms wcet 12 ms deadline 10 ms priority 1 }
    }""")
    assert [(d.code, d.severity) for d in validate(model)] == [("V_RT_OVERLOAD", "warning")]


def _component(props: str) -> m.Component:
    model = parse_model(f"system S {{ element E {{ {props} }} }}")
    return model.component("E")


@pytest.mark.parametrize("guard,expected", [
    ("temp > 40.0", "bool"),
    ("true", "bool"),
    ("count == 3 and not flag", "bool"),
    ("count >= 2.5", "bool"),
    ('label == "hot"', "bool"),
    ("flag != false", "bool"),
    ("temp", "float"),
    ("count", "int"),
])
def test_typecheck_guard(guard, expected):
    comp = _component("property temp: float; property count: int; property flag: bool;"
                      " property label: string;")
    assert typecheck_guard(parse_expression(guard), comp) == expected


@pytest.mark.parametrize("guard,message", [
    ("temp + 1 > 3", "arithmetic"),
    ("-temp < 3", "arithmetic"),
    ("missing > 1", "unresolved property 'missing'"),
    ("flag and temp", "bool operands"),
    ("not temp", "bool operand"),
    ('label < 3', "cannot compare"),
    ("flag == 1", "cannot compare"),
])
def test_typecheck_guard_rejects(guard, message):
    comp = _component("property temp: float; property flag: bool; property label: string;")
    with pytest.raises(GuardTypeError, match=message):
        typecheck_guard(parse_expression(guard), comp)


def test_non_boolean_guard_reported_at_transition():
    assert codes(load("bad_guard_type")) == ["V_GUARD_TYPE"]


def test_arithmetic_is_fine_in_set_actions():
    # the clean probe increments a float property in an action
    assert validate(load("clean")) == []


def test_unused_event_and_action_warn():
    model = parse_model("""system S {
        element E {
            property n: int;
            statemachine {
                initial state A { entry Go exit Go }
                event Go generic does Bump
                event Spare generic does Bump
                action Bump set n = n + 1
                action Idle set n = 0
            }
        }
    }""")
    diags = validate(model)
    assert [(d.code, d.severity) for d in diags] == [("V_UNUSED", "warning")] * 2
    assert ["E.Spare" in diags[0].message, "E.Idle" in diags[1].message] == [True, True]
