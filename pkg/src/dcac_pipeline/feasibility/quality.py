"""Dispatch quality against a reference: absolute error and cost difference."""

from __future__ import annotations

import numpy as np

from ..exceptions import DimensionMismatch, ZeroReferenceCost
from ..grid.model import NetworkCase
from .reference import ReferenceDispatch


def compute_mae(result: np.ndarray, reference: ReferenceDispatch) -> float:
    """Mean absolute per-unit dispatch error over in-service generators."""
    result = np.asarray(result, dtype=float)
    if result.shape != (len(reference.p_g_ref),):
        raise DimensionMismatch(
            "dispatch", len(reference.p_g_ref), result.shape, stage="feasibility"
        )
    mask = reference.mask
    if not mask.any():
        return 0.0
    return float(np.mean(np.abs(result[mask] - reference.p_g[mask])))


def compute_cost_difference(cost: float, reference: ReferenceDispatch) -> float:
    """Percent difference of ``cost`` from the reference cost."""
    if reference.cost_ref <= 0:
        raise ZeroReferenceCost(
            f"Reference {reference.source} has non-positive cost {reference.cost_ref}",
            operation="compute_cost_difference",
        )
    return abs(cost - reference.cost_ref) / reference.cost_ref * 100.0


def dispatch_cost(case: NetworkCase, p_g: np.ndarray) -> float:
    """Hourly generation cost of a per-unit dispatch."""
    p_g = np.asarray(p_g, dtype=float)
    if p_g.shape != (case.arrays.n_gen,):
        raise DimensionMismatch("p_g", case.arrays.n_gen, p_g.shape, stage="feasibility")
    return case.generation_cost(p_g)
