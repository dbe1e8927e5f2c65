"""Limit violations and dispatch quality metrics."""

from .quality import compute_cost_difference, compute_mae, dispatch_cost
from .reference import ReferenceDispatch, load_reference_dispatch
from .violations import (
    CategoryViolations,
    ViolationCategory,
    ViolationDetail,
    ViolationReport,
    check_violations,
)

__all__ = [
    "CategoryViolations",
    "ReferenceDispatch",
    "ViolationCategory",
    "ViolationDetail",
    "ViolationReport",
    "check_violations",
    "compute_cost_difference",
    "compute_mae",
    "dispatch_cost",
    "load_reference_dispatch",
]
