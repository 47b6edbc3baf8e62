"""Discrete-event simulation of fixed-priority preemptive scheduling.

Used as an independent check on the response-time analysis: all tasks are
released together at t=0 (the critical instant) and then strictly
periodically.
"""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .tasks import CoreTaskSet

log = logging.getLogger(__name__)

MAX_HORIZON_US = 3_600_000_000  # one hour of simulated time


@dataclass(frozen=True)
class Job:
    task: str
    index: int
    release: int
    deadline: int  # absolute
    finish: Optional[int]  # None when still unfinished at the end of the run

    @property
    def response(self) -> Optional[int]:
        return None if self.finish is None else self.finish - self.release

    @property
    def missed(self) -> bool:
        return self.finish is None or self.finish > self.deadline


@dataclass
class SimTrace:
    horizon: int
    capped: bool
    segments: List[Tuple[int, int, Optional[str]]] = field(default_factory=list)
    jobs: List[Job] = field(default_factory=list)

    def worst_response(self) -> Dict[str, Optional[int]]:
        """Largest observed response per task; None if any job never finished."""
        worst: Dict[str, Optional[int]] = {}
        for job in self.jobs:
            if job.task in worst and worst[job.task] is None:
                continue
            r = job.response
            worst[job.task] = None if r is None else max(r, worst.get(job.task) or 0)
        return worst

    def misses(self) -> Dict[str, int]:
        out: Dict[str, int] = {}
        for job in self.jobs:
            if job.missed:
                out[job.task] = out.get(job.task, 0) + 1
        return out


def hyperperiod(task_set: CoreTaskSet) -> int:
    return math.lcm(*(t.period for t in task_set.tasks)) if task_set.tasks else 0


def simulate(task_set: CoreTaskSet, horizon: Optional[int] = None,
             drain_limit: Optional[int] = None) -> SimTrace:
    """Simulate the task set and record every job released before ``horizon``.

    ``horizon`` defaults to the hyperperiod and is capped at
    :data:`MAX_HORIZON_US`. After the last tracked release the simulation
    keeps running, with all tasks still releasing, until every tracked job
    finishes or ``drain_limit`` more microseconds pass (default: one more
    horizon). Ties between equal priorities follow declaration order.
    """
    tasks = task_set.tasks  # highest priority first
    if horizon is None:
        horizon = hyperperiod(task_set)
    capped = False
    if horizon > MAX_HORIZON_US:
        log.warning("simulation horizon %d us exceeds the cap; using %d us", horizon, MAX_HORIZON_US)
        horizon, capped = MAX_HORIZON_US, True
    trace = SimTrace(horizon, capped)
    if not tasks:
        return trace
    stop = horizon + (horizon if drain_limit is None else drain_limit)

    # heap of (rank, release, job index, task index); remaining work kept separately
    ready: List[Tuple[int, int, int, int]] = []
    remaining: Dict[Tuple[int, int], int] = {}
    next_release = [0] * len(tasks)
    next_index = [0] * len(tasks)
    tracked: Dict[Tuple[int, int], Tuple[int, int]] = {}  # (task, job) -> (release, abs deadline)
    finished: Dict[Tuple[int, int], int] = {}
    pending_tracked = 0
    now = 0

    def release_due(t: int) -> None:
        nonlocal pending_tracked
        for i, task in enumerate(tasks):
            while next_release[i] <= t:
                rel, k = next_release[i], next_index[i]
                remaining[(i, k)] = task.wcet
                heapq.heappush(ready, (i, rel, k, i))
                if rel < horizon:
                    tracked[(i, k)] = (rel, rel + task.deadline)
                    pending_tracked += 1
                next_release[i] += task.period
                next_index[i] += 1

    release_due(0)
    while now < stop and (pending_tracked or min(next_release) < horizon):
        upcoming = min(next_release)
        if not ready:
            trace.segments.append((now, upcoming, None))
            now = upcoming
            release_due(now)
            continue
        rank, rel, k, i = ready[0]
        left = remaining[(i, k)]
        run_until = min(now + left, upcoming, stop)
        if trace.segments and trace.segments[-1][2] == tasks[i].id and trace.segments[-1][1] == now:
            start = trace.segments.pop()[0]
        else:
            start = now
        trace.segments.append((start, run_until, tasks[i].id))
        remaining[(i, k)] = left - (run_until - now)
        now = run_until
        if remaining[(i, k)] == 0:
            heapq.heappop(ready)
            del remaining[(i, k)]
            if (i, k) in tracked:
                finished[(i, k)] = now
                pending_tracked -= 1
        release_due(now)

    for (i, k), (rel, dl) in sorted(tracked.items(), key=lambda kv: (kv[1][0], kv[0][0])):
        trace.jobs.append(Job(tasks[i].id, k, rel, dl, finished.get((i, k))))
    return trace
