"""What-if edits of timing properties and allocations."""

from __future__ import annotations

from dataclasses import replace
from fractions import Fraction
from typing import Mapping, Optional

from .. import model as m


def with_timing(model: m.Model, wcet_factor=1, deadline_us: Optional[int] = None) -> m.Model:
    """Scale every wcet by ``wcet_factor`` (rounded up to whole microseconds)
    and optionally set one deadline for all annotations."""
    factor = Fraction(wcet_factor)
    anns = []
    for ann in model.rt_annotations:
        scaled = factor * ann.wcet_us
        wcet = -(-scaled.numerator // scaled.denominator)
        anns.append(replace(ann, wcet_us=wcet,
                            deadline_us=ann.deadline_us if deadline_us is None else deadline_us))
    return replace(model, rt_annotations=tuple(anns))


def with_allocations(model: m.Model, placement: Mapping[str, str]) -> m.Model:
    """Replace the allocations with ``{instance path: "Proc.core"}`` in mapping order."""
    allocs = []
    for instance, core in placement.items():
        proc, _, core_name = core.partition(".")
        allocs.append(m.Allocation(instance, m.CoreRef(proc, core_name)))
    return replace(model, allocations=tuple(allocs))
