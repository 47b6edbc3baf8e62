"""Shared helpers for the test suite."""

from __future__ import annotations

import random
from fractions import Fraction
from pathlib import Path
from typing import List, Sequence, Tuple

from iotforge import model as m
from iotforge.parser import parse_model
from iotforge.serializer import format_ms
from iotforge.sched import CoreTaskSet, RTTask

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"
MS = 1000

CORE = m.CoreRef("P", "c0")

# parseable fixtures; fixtures/syntax/ holds the deliberately broken ones
MODEL_FIXTURES = sorted(FIXTURES.glob("*.ciot"))
SYNTAX_FIXTURES = sorted((FIXTURES / "syntax").glob("*.ciot"))
ALL_FIXTURES = MODEL_FIXTURES + SYNTAX_FIXTURES

SEEDED = {
    "bad_state": "V_STATE_EVENTS",
    "bad_port_match": "V_PORT_MATCH",
    "bad_action_direction": "V_ACTION_DIRECTION",
    "bad_event_port": "V_EVENT_PORT",
    "bad_sm_initial": "V_SM_INITIAL",
    "bad_guard_type": "V_GUARD_TYPE",
    "bad_alloc_missing": "V_ALLOC_MISSING",
    "bad_alloc_core": "V_ALLOC_CORE",
    "bad_rt_values": "V_RT_VALUES",
    "bad_entity_parts": "V_ENTITY_PARTS",
    "bad_payload_cycle": "V_PAYLOAD_CYCLE",
    "bad_dup_name": "V_DUP_NAME",
}
EXTRA_SEEDED = {
    "bad_unresolved": "V_UNRESOLVED",
    "bad_type_mismatch": "V_TYPE_MISMATCH",
    "bad_part_kind": "V_PART_KIND",
    "bad_containment_cycle": "V_CONTAINMENT_CYCLE",
    "bad_alloc_path": "V_ALLOC_PATH",
    "bad_rt_target": "V_RT_TARGET",
}
WARNING_FIXTURES = {"warn_unreachable": "V_UNREACHABLE"}

PERIODS_MS = (50, 100, 200, 400, 500)


def fixture_text(name: str) -> str:
    return (FIXTURES / f"{name}.ciot").read_text(encoding="utf-8")


def load(name: str) -> m.Model:
    return parse_model(fixture_text(name), f"{name}.ciot")


def task(tid: str, c_ms, t_ms, d_ms=None, prio: int = 1, order: int = 0) -> RTTask:
    """Build a task from millisecond values."""
    d_ms = t_ms if d_ms is None else d_ms
    return RTTask(tid, CORE, int(c_ms * MS), int(t_ms * MS), int(d_ms * MS), prio, order=order)


def task_set(*tasks: RTTask) -> CoreTaskSet:
    return CoreTaskSet.of(CORE, tasks)


def _uunifast(rng: random.Random, n: int, total: float) -> List[float]:
    utils, remaining = [], total
    for i in range(1, n):
        nxt = remaining * rng.random() ** (1.0 / (n - i))
        utils.append(remaining - nxt)
        remaining = nxt
    utils.append(remaining)
    return utils


def random_task_set(rng: random.Random, u_min: float = 0.05, u_max: float = 0.95,
                    constrained: bool = True) -> CoreTaskSet:
    """Periodic set with n <= 6, distinct random priorities and U in [u_min, u_max].

    With ``constrained`` some deadlines are drawn below the period to
    provoke more diverged cases.
    """
    while True:
        n = rng.randint(1, 6)
        utils = _uunifast(rng, n, rng.uniform(u_min, u_max))
        priorities = rng.sample(range(1, 50), n)
        tasks = []
        for i, (u, prio) in enumerate(zip(utils, priorities)):
            period = rng.choice(PERIODS_MS) * MS
            wcet = max(1, int(u * period))
            deadline = period
            if constrained and rng.random() < 0.4:
                deadline = rng.randint(wcet, period)
            tasks.append(RTTask(f"t{i}", CORE, wcet, period, deadline, prio, order=i))
        ts = CoreTaskSet.of(CORE, tasks)
        if u_min <= sum(Fraction(t.wcet, t.period) for t in tasks) <= u_max:
            return ts


def overloaded_task_set(rng: random.Random) -> CoreTaskSet:
    """Random periodic set with utilization strictly above 1."""
    while True:
        ts = random_task_set(rng, 1.01, 2.0, constrained=False)
        if sum(Fraction(t.wcet, t.period) for t in ts.tasks) > 1:
            return ts


def model_text_for(tasks: Sequence[Tuple[int, int, int, int]], name: str = "Generated") -> str:
    """A complete model whose single core carries ``tasks`` as (C, T, D, P) in microseconds."""
    ops = "\n".join(f"        op op{i}()" for i in range(len(tasks)))
    rts = "\n".join(
        f"    rt site.b.e.op{i} {{ periodic {format_ms(t)} ms wcet {format_ms(c)} ms deadline {format_ms(d)} ms priority {p} }}"
        for i, (c, t, d, p) in enumerate(tasks)
    )
    return f"""system {name} {{
    interface IWork {{
{ops}
    }}
    element Worker {{
        provides port p: IWork;
    }}
    board Box {{
        part e: Worker;
    }}
    entity Site {{
        part b: Box;
    }}
    hardware {{
        processor P {{ core c0 }}
    }}
    allocate site.b -> P.c0
{rts}
}}
"""
