from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List

from .model import Loc

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    code: str
    message: str
    line: int = 1
    column: int = 1

    @classmethod
    def at(cls, loc: Loc, severity: str, code: str, message: str) -> "Diagnostic":
        # programmatically built models carry no locations
        line, column = loc if loc else (1, 1)
        return cls(severity, code, message, line, column)

    @property
    def is_error(self) -> bool:
        return self.severity == ERROR

    def to_dict(self) -> dict:
        return {
            "code": self.code,
            "severity": self.severity,
            "message": self.message,
            "line": self.line,
            "column": self.column,
        }

    def format(self, path: str = "<input>") -> str:
        return f"{path}:{self.line}:{self.column}: {self.severity} {self.code}: {self.message}"


def has_errors(diagnostics: Iterable[Diagnostic]) -> bool:
    return any(d.is_error for d in diagnostics)


def sort_diagnostics(diagnostics: Iterable[Diagnostic]) -> List[Diagnostic]:
    return sorted(diagnostics, key=lambda d: (d.line, d.column))
