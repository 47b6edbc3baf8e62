"""One entry point per verb, shared by the CLI and the HTTP service.

Each function takes model text and returns an :class:`Outcome`; nothing here
touches the filesystem or the network.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from . import model as m
from .diagnostics import Diagnostic, has_errors
from .parser import ModelSyntaxError, parse_model
from .sched.report import SchedReport, analyze
from .thingml import ThingMLUnit, generate
from .validator import validate

OK = "ok"
INVALID = "invalid"
UNSCHEDULABLE = "unschedulable"


@dataclass
class Outcome:
    status: str
    system: Optional[str] = None
    diagnostics: List[Diagnostic] = field(default_factory=list)
    report: Optional[SchedReport] = None
    units: Optional[List[ThingMLUnit]] = None

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "system": self.system,
            "diagnostics": [d.to_dict() for d in self.diagnostics],
            "report": self.report.to_dict() if self.report is not None else None,
            "units": None if self.units is None else [
                {"file_name": u.file_name, "text": u.text} for u in self.units
            ],
        }


def _load(text: str, path: str) -> Tuple[Optional[m.Model], List[Diagnostic]]:
    try:
        model = parse_model(text, path)
    except ModelSyntaxError as exc:
        return None, exc.diagnostics
    return model, validate(model)


def _name(model: Optional[m.Model]) -> Optional[str]:
    return model.name if model is not None else None


def run_validate(text: str, path: str = "<input>") -> Outcome:
    model, diags = _load(text, path)
    return Outcome(INVALID if has_errors(diags) else OK, _name(model), diags)


def run_generate(text: str, path: str = "<input>") -> Outcome:
    model, diags = _load(text, path)
    if model is None or has_errors(diags):
        return Outcome(INVALID, _name(model), diags)
    return Outcome(OK, model.name, diags, units=generate(model))


def run_analyze(text: str, path: str = "<input>") -> Outcome:
    model, diags = _load(text, path)
    if model is None or has_errors(diags):
        return Outcome(INVALID, _name(model), diags)
    report = analyze(model)
    return Outcome(OK if report.schedulable else UNSCHEDULABLE, model.name, diags, report=report)


OPERATIONS: Dict[str, Callable[..., Outcome]] = {
    "validate": run_validate,
    "generate": run_generate,
    "analyze": run_analyze,
}
