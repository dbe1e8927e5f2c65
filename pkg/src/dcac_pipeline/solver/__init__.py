"""Convex quadratic programming."""

from .qp import QpProblem, QpSolution, QpStatus, solve_qp

__all__ = [
    "QpProblem",
    "QpSolution",
    "QpStatus",
    "solve_qp",
]
