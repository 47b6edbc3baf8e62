from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple

from .. import model as m
from ..diagnostics import Diagnostic, has_errors
from ..instance import build_instance_model
from ..validator import validate
from .rta import response_time
from .tasks import CoreTaskSet, RTTask, derive_tasks, utilization

SCHEDULABLE = "SCHEDULABLE"
NOT_SCHEDULABLE = "NOT SCHEDULABLE"
DIVERGED = "diverged"


class AnalysisError(Exception):
    """The model has validation errors and cannot be analysed."""

    def __init__(self, diagnostics: List[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__(f"model has {sum(d.is_error for d in diagnostics)} validation error(s)")


@dataclass(frozen=True)
class TaskResult:
    task: RTTask
    response: Optional[int]  # None: diverged past the deadline

    @property
    def deadline_met(self) -> bool:
        return self.response is not None and self.response <= self.task.deadline

    @property
    def slack(self) -> Optional[int]:
        return None if self.response is None else self.task.deadline - self.response


@dataclass(frozen=True)
class CoreResult:
    core: m.CoreRef
    utilization: Fraction
    tasks: Tuple[TaskResult, ...]

    @property
    def schedulable(self) -> bool:
        return self.utilization <= 1 and all(t.deadline_met for t in self.tasks)


@dataclass(frozen=True)
class SchedReport:
    system: str
    cores: Tuple[CoreResult, ...]

    @property
    def schedulable(self) -> bool:
        return all(c.schedulable for c in self.cores)

    @property
    def verdict(self) -> str:
        return SCHEDULABLE if self.schedulable else NOT_SCHEDULABLE

    def task(self, task_id: str) -> TaskResult:
        for core in self.cores:
            for result in core.tasks:
                if result.task.id == task_id:
                    return result
        raise KeyError(task_id)

    def to_dict(self) -> dict:
        return {
            "system": self.system,
            "verdict": self.verdict,
            "cores": [
                {
                    "processor": c.core.processor,
                    "core": c.core.core,
                    "utilization": f"{c.utilization.numerator}/{c.utilization.denominator}",
                    "tasks": [
                        {
                            "id": r.task.id,
                            "C_us": r.task.wcet,
                            "T_us": r.task.period,
                            "D_us": r.task.deadline,
                            "priority": r.task.priority,
                            "R_us": DIVERGED if r.response is None else r.response,
                            "deadline_met": r.deadline_met,
                            "slack_us": r.slack,
                        }
                        for r in c.tasks
                    ],
                }
                for c in self.cores
            ],
        }

    def to_json(self) -> str:
        return dumps_report(self.to_dict())


def dumps_report(data: dict) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def analyze_core(task_set: CoreTaskSet) -> CoreResult:
    u = utilization(task_set)
    if u > 1:
        # overloaded: no response time is bounded, abort the core
        results = tuple(TaskResult(t, None) for t in task_set.tasks)
    else:
        results = tuple(
            TaskResult(t, response_time(t, task_set.tasks[:i]))
            for i, t in enumerate(task_set.tasks)
        )
    return CoreResult(task_set.core, u, results)


def analyze(model: m.Model) -> SchedReport:
    """Validate, derive per-core task sets and run response-time analysis on each.

    Raises :class:`AnalysisError` when validation reports errors.
    """
    diags = validate(model)
    if has_errors(diags):
        raise AnalysisError(diags)
    im = build_instance_model(model)
    task_sets = derive_tasks(im, model.rt_annotations, model.hardware)
    return SchedReport(model.name, tuple(analyze_core(ts) for ts in task_sets))


def _ms(us) -> str:
    if us is None:
        return "-"
    if isinstance(us, str):
        return us
    return f"{us / 1000:g}"


def format_report_text(data: dict) -> str:
    """Human-readable table for a report dict (as produced by ``to_dict``)."""
    lines = [f"system {data['system']}: {data['verdict']}"]
    for core in data["cores"]:
        num, den = (int(x) for x in core["utilization"].split("/"))
        lines.append(f"  {core['processor']}.{core['core']}  U = {core['utilization']}"
                     f" ({float(Fraction(num, den)):.3f})")
        for t in core["tasks"]:
            mark = "ok" if t["deadline_met"] else "MISS"
            lines.append(
                f"    {t['id']:<28} P={t['priority']:<3} C={_ms(t['C_us'])}ms"
                f" T={_ms(t['T_us'])}ms D={_ms(t['D_us'])}ms"
                f" R={_ms(t['R_us'])}{'' if t['R_us'] == DIVERGED else 'ms'}"
                f" slack={_ms(t['slack_us'])}{'' if t['slack_us'] is None else 'ms'}  {mark}"
            )
    if not data["cores"]:
        lines.append("  (no rt annotations)")
    return "\n".join(lines) + "\n"
