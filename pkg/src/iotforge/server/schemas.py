"""Request and response models for the HTTP API."""

from typing import List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

Operation = Literal["validate", "generate", "analyze"]


class AnalysisRequest(BaseModel):
    model_config = ConfigDict(protected_namespaces=(), extra="forbid")

    model_text: str = Field(..., description="Model source in the .ciot syntax")
    # optional in the body; the URL already names the operation
    operation: Optional[Operation] = None

    @field_validator("model_text")
    @classmethod
    def not_blank(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("model_text must not be empty")
        return value


class DiagnosticOut(BaseModel):
    code: str
    severity: Literal["error", "warning"]
    message: str
    line: int
    column: int


class TaskOut(BaseModel):
    id: str
    C_us: int
    T_us: int
    D_us: int
    priority: int
    R_us: Union[int, Literal["diverged"]]
    deadline_met: bool
    slack_us: Optional[int]


class CoreOut(BaseModel):
    processor: str
    core: str
    utilization: str = Field(..., pattern=r"^\d+/\d+$")
    tasks: List[TaskOut]


class ReportOut(BaseModel):
    system: str
    verdict: Literal["SCHEDULABLE", "NOT SCHEDULABLE"]
    cores: List[CoreOut]


class UnitOut(BaseModel):
    file_name: str
    text: str


class AnalysisResponse(BaseModel):
    status: Literal["ok", "invalid", "unschedulable"]
    system: Optional[str] = Field(None, description="System name, when the model parsed")
    diagnostics: List[DiagnosticOut]
    report: Optional[ReportOut] = None
    units: Optional[List[UnitOut]] = None


class HealthResponse(BaseModel):
    status: Literal["ok"] = "ok"


class ErrorResponse(BaseModel):
    detail: str
    error_id: Optional[str] = None
