"""End-to-end acceptance checks; each test prints one PASS/FAIL line."""

import hashlib
import json
import random
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from fractions import Fraction

import httpx
import pytest
from fastapi.testclient import TestClient

from iotforge.cli import main
from iotforge.instance import build_instance_model
from iotforge.parser import parse_model
from iotforge.sched import NOT_SCHEDULABLE, SCHEDULABLE, analyze, analyze_core, hyperperiod, simulate
from iotforge.sched.scenario import with_allocations, with_timing
from iotforge.serializer import serialize_model
from iotforge.server import app
from iotforge.thingml import check_units, generate
from iotforge.validator import validate

from support import (ALL_FIXTURES, FIXTURES, GOLDEN, MODEL_FIXTURES, MS, SEEDED, SYNTAX_FIXTURES,
                     load, model_text_for, overloaded_task_set, random_task_set)

PLACEMENT = {"plant.n1": "P1.c0", "plant.n2": "P2.c0", "plant.n3": "P3.c0",
             "plant.n4": "P4.c0", "plant.battery": "P2.c1"}


@pytest.fixture
def criterion(pytestconfig):
    capture = pytestconfig.pluginmanager.getplugin("capturemanager")

    def emit(line):
        with capture.global_and_fixture_disabled():
            print(f"\n{line}", flush=True)

    @contextmanager
    def run(number, label):
        start = time.perf_counter()
        try:
            yield
        except BaseException as exc:
            emit(f"FAIL criterion {number}: {label}: {type(exc).__name__}: {exc}".splitlines()[0])
            raise
        emit(f"PASS criterion {number}: {label} ({time.perf_counter() - start:.2f} s)")
    return run


def test_criterion_1_scenario_flip(criterion):
    with criterion(1, "original not schedulable, interventions schedulable with R <= 100 ms"):
        start = time.perf_counter()
        original = load("safety")
        assert analyze(original).verdict == NOT_SCHEDULABLE
        fixed = with_allocations(with_timing(original, Fraction(3, 10), 100 * MS), PLACEMENT)
        report = analyze(fixed)
        assert report.verdict == SCHEDULABLE
        assert all(r.response is not None and r.response <= 100 * MS
                   for c in report.cores for r in c.tasks)
        assert time.perf_counter() - start < 1.0


def test_criterion_2_positive_slack(criterion):
    with criterion(2, "every 200 ms task in the fixed model has R <= 100 ms <= T"):
        report = analyze(load("safety_fixed"))
        tasks = [r for c in report.cores for r in c.tasks if r.task.period == 200 * MS]
        assert len(tasks) == 12
        assert all(r.response <= 100 * MS <= r.task.period and r.slack > 0 for r in tasks)


def test_criterion_3_rta_matches_simulation(criterion):
    with criterion(3, "RTA agrees with simulation on 200 random task sets"):
        start = time.perf_counter()
        rng = random.Random(31337)
        sets = 0
        outcomes = {"finite": 0, "diverged": 0}
        for _ in range(200):
            ts = random_task_set(rng)
            assert len(ts.tasks) <= 6
            assert len({t.priority for t in ts.tasks}) == len(ts.tasks)
            assert all(t.period in {p * MS for p in (50, 100, 200, 400, 500)} for t in ts.tasks)
            result = analyze_core(ts)
            assert result.utilization <= Fraction(95, 100)
            h = hyperperiod(ts)
            trace = simulate(ts, horizon=h, drain_limit=h)
            worst = trace.worst_response()
            for r in result.tasks:
                if r.response is None:
                    outcomes["diverged"] += 1
                    assert any(j.task == r.task.id and j.missed and j.deadline <= 2 * h
                               for j in trace.jobs), r.task
                else:
                    outcomes["finite"] += 1
                    assert worst[r.task.id] == r.response, r.task
            sets += 1
        assert sets >= 100
        assert outcomes["finite"] and outcomes["diverged"], outcomes
        assert time.perf_counter() - start < 30.0


def test_criterion_4_overload_rejected(criterion):
    with criterion(4, "50 random task sets with U > 1 are NOT SCHEDULABLE"):
        rng = random.Random(4242)
        for i in range(50):
            ts = overloaded_task_set(rng)
            timings = [(t.wcet, t.period, t.deadline, t.priority) for t in ts.tasks]
            report = analyze(parse_model(model_text_for(timings, f"Overload{i}")))
            assert report.cores[0].utilization > 1
            assert report.verdict == NOT_SCHEDULABLE


def _digest(units):
    h = hashlib.sha256()
    for u in units:
        h.update(u.file_name.encode() + b"\0" + u.text.encode() + b"\0")
    return h.hexdigest()


def test_criterion_5_mapping_totality(criterion):
    with criterion(5, "safety model maps totally, passes the subset checker, hash stable"):
        model = load("safety")
        units = generate(model)
        sources = {src for u in units for src in u.provenance.values()}
        expected = {f"payload {p.name}" for p in model.payloads}
        for comp in model.elements + model.boards:
            expected.add(f"component {comp.name}")
            sm = comp.statemachine
            if sm is not None:
                expected |= {f"state {comp.name}.{s.name}" for s in sm.states}
                expected |= {f"transition {comp.name}#{i}" for i in range(len(sm.transitions))}
                expected |= {f"event {comp.name}.{e.name}" for e in sm.events}
        assert not expected - sources, sorted(expected - sources)
        # sends and receives: every port-bound event appears in its port block
        for comp in model.elements + model.boards:
            text = next(u.text for u in units if u.file_name == f"{comp.name}.thingml")
            for ev in (comp.statemachine.events if comp.statemachine else ()):
                if ev.kind != "generic" and comp.statemachine.action(ev.action).payload:
                    verb = "sends" if ev.kind == "outgoing" else "receives"
                    payload = comp.statemachine.action(ev.action).payload
                    assert f"{verb} {payload[0].lower()}{payload[1:]}" in text, (comp.name, ev.name)
        assert len(build_instance_model(model).connections) == sum(
            s.startswith("connection ") for s in sources)
        assert all(p == [] for p in check_units(units).values())
        assert len({_digest(generate(model)) for _ in range(10)}) == 1


def test_criterion_6_seeded_faults(criterion):
    with criterion(6, "12 seeded fixtures trigger exactly their rule; clean triggers none"):
        assert len(SEEDED) == 12
        for name, code in SEEDED.items():
            assert [d.code for d in validate(load(name))] == [code], name
        assert validate(load("clean")) == []


def test_criterion_7_round_trip(criterion):
    with criterion(7, "parse, serialize, parse is the identity on every parseable fixture"):
        assert len(MODEL_FIXTURES) >= 20
        for path in MODEL_FIXTURES:
            model = parse_model(path.read_text())
            assert parse_model(serialize_model(model)) == model, path.name


def _expected_exit(path, verb):
    if path in SYNTAX_FIXTURES or path.stem.startswith("bad_"):
        return 1
    return 3 if verb == "analyze" and path.stem == "safety" else 0


def test_criterion_8_cli_contract(criterion, capsysbinary, tmp_path):
    with criterion(8, "CLI exit codes over the corpus and byte-exact JSON report"):
        for path in ALL_FIXTURES:
            for verb in ("validate", "analyze"):
                assert main([verb, str(path)]) == _expected_exit(path, verb), (verb, path.name)
            args = ["generate", str(path), "--out", str(tmp_path)]
            assert main(args) == _expected_exit(path, "generate"), path.name
        assert main(["analyze", "missing.ciot"]) == 2
        for name in ("safety", "safety_fixed"):
            capsysbinary.readouterr()
            main(["analyze", "--format", "json", str(FIXTURES / f"{name}.ciot")])
            assert capsysbinary.readouterr().out == (GOLDEN / f"{name}.report.json").read_bytes()


def test_criterion_9_service_parity(criterion, capsys, live_server):
    with criterion(9, "service matches CLI JSON per fixture; 16 concurrent bodies identical"):
        client = TestClient(app)
        for path in ALL_FIXTURES:
            body = client.post("/v1/analyze", json={"model_text": path.read_text()}).json()
            verb = "analyze" if body["report"] is not None else "validate"
            capsys.readouterr()
            main([verb, "--format", "json", str(path)])
            cli = json.loads(capsys.readouterr().out)
            assert (body["report"] if verb == "analyze" else body["diagnostics"]) == cli, path.name
        text = (FIXTURES / "safety.ciot").read_text()
        with ThreadPoolExecutor(max_workers=16) as pool:
            bodies = list(pool.map(
                lambda _: httpx.post(f"{live_server}/v1/analyze", json={"model_text": text},
                                     timeout=30).content, range(16)))
        assert len(set(bodies)) == 1
