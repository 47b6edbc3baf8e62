from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .. import model as m
from ..instance import InstanceModel


class TaskDerivationError(Exception):
    pass


@dataclass(frozen=True)
class RTTask:
    """One analysable request stream; times in microseconds.

    ``order`` is the declaration index, used to break priority ties.
    """

    id: str
    core: m.CoreRef
    wcet: int
    period: int
    deadline: int
    priority: int
    pattern: str = m.PERIODIC
    order: int = 0

    def __post_init__(self):
        if self.wcet <= 0 or self.period <= 0 or self.deadline <= 0:
            raise ValueError(f"task {self.id}: wcet, period and deadline must be positive")

    @property
    def rank(self) -> Tuple[int, int]:
        """Sort key: smaller rank means higher priority."""
        return (-self.priority, self.order)


@dataclass(frozen=True)
class CoreTaskSet:
    core: m.CoreRef
    tasks: Tuple[RTTask, ...]  # highest priority first

    @classmethod
    def of(cls, core: m.CoreRef, tasks: Iterable[RTTask]) -> "CoreTaskSet":
        return cls(core, tuple(sorted(tasks, key=lambda t: t.rank)))


def utilization(tasks) -> Fraction:
    """Exact sum of wcet/period over a task set (or any iterable of tasks)."""
    items = tasks.tasks if isinstance(tasks, CoreTaskSet) else tasks
    return sum((Fraction(t.wcet, t.period) for t in items), Fraction(0))


def derive_tasks(instance_model: InstanceModel,
                 annotations: Sequence[m.RTAnnotation],
                 hardware: Optional[m.Hardware] = None) -> List[CoreTaskSet]:
    """Bind every annotation to the core of its nearest allocated ancestor.

    Sporadic minimum inter-arrival times are analysed as periods. Core sets
    follow the hardware declaration order when ``hardware`` is given, and
    first use otherwise; cores without tasks are omitted.
    """
    by_core: Dict[m.CoreRef, List[RTTask]] = {}
    for index, ann in enumerate(annotations):
        core = instance_model.core_of(ann.instance)
        if core is None:
            raise TaskDerivationError(f"rt target {ann.target!r} is not allocated to any core")
        task = RTTask(ann.target, core, ann.wcet_us, ann.period_us, ann.deadline_us,
                      ann.priority, ann.pattern, index)
        by_core.setdefault(core, []).append(task)

    order = list(hardware.core_refs()) if hardware is not None else []
    order += [c for c in by_core if c not in order]
    return [CoreTaskSet.of(core, by_core[core]) for core in order if core in by_core]
