from .report import (DIVERGED, NOT_SCHEDULABLE, SCHEDULABLE, AnalysisError, CoreResult,
                     SchedReport, TaskResult, analyze, analyze_core, format_report_text)
from .rta import response_time
from .simulate import SimTrace, hyperperiod, simulate
from .tasks import CoreTaskSet, RTTask, TaskDerivationError, derive_tasks, utilization

__all__ = [
    "AnalysisError", "CoreResult", "CoreTaskSet", "DIVERGED", "NOT_SCHEDULABLE", "RTTask",
    "SCHEDULABLE", "SchedReport", "SimTrace", "TaskDerivationError", "TaskResult", "analyze",
    "analyze_core", "derive_tasks", "format_report_text", "hyperperiod", "response_time",
    "simulate", "utilization",
]
