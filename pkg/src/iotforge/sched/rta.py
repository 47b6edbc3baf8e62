"""Fixed-priority preemptive response-time analysis on a single core."""

from __future__ import annotations

from typing import Optional, Sequence

from .tasks import RTTask


def _busy_window(demand: int, higher_priority: Sequence[RTTask], limit: int) -> Optional[int]:
    """Smallest w with w = demand + sum(ceil(w / T_j) * C_j), or None past ``limit``."""
    w = demand
    while w <= limit:
        nxt = demand + sum(-(-w // hp.period) * hp.wcet for hp in higher_priority)
        if nxt == w:
            return w
        w = nxt
    return None


def response_time(task: RTTask, higher_priority: Sequence[RTTask]) -> Optional[int]:
    """Worst-case response time in microseconds, or None once it exceeds the deadline.

    Starts from R = C and iterates R = C + sum(ceil(R / T_j) * C_j) over the
    higher-priority tasks. When the first job finishes after the next release
    (only possible with D > T) the later jobs of the level-i busy period are
    examined as well, and the worst of them is returned.
    """
    worst = 0
    q = 0
    while True:
        release = q * task.period
        finish = _busy_window((q + 1) * task.wcet, higher_priority, release + task.deadline)
        if finish is None:
            return None
        worst = max(worst, finish - release)
        if finish <= release + task.period:
            return worst
        q += 1
