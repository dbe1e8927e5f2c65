"""Distributed slack participation factors."""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np

from ..exceptions import DimensionMismatch, NoGenerators
from ..grid.model import Generator
from .models import SlackAllocation, SlackMode

logger = logging.getLogger(__name__)


def participation_factors(
    p_max: np.ndarray, in_service: np.ndarray, dispatch: np.ndarray
) -> tuple[np.ndarray, SlackMode]:
    """
    Share of the slack carried by each in-service generator.

    Proportional to upward headroom ``max(p_max - dispatch, 0)``. When no unit
    has headroom the shares follow capacity instead, and an all-zero capacity
    splits evenly.
    """
    on = np.asarray(in_service, dtype=bool)
    if not on.any():
        raise NoGenerators(
            "No in-service generator can take the slack", operation="distribute_slack"
        )

    headroom = np.where(on, np.maximum(p_max - dispatch, 0.0), 0.0)
    total = headroom.sum()
    if total > 0:
        return headroom / total, SlackMode.HEADROOM

    capacity = np.where(on, np.maximum(p_max, 0.0), 0.0)
    total = capacity.sum()
    if total > 0:
        return capacity / total, SlackMode.CAPACITY_FALLBACK
    return on / on.sum(), SlackMode.CAPACITY_FALLBACK


def distribute_slack(
    generators: Sequence[Generator],
    setpoints: np.ndarray,
    ell_tot: float,
) -> SlackAllocation:
    """
    Allocate an active-power mismatch across generators by headroom.

    Args:
        generators: Generators of the case, in case order
        setpoints: Per-unit active setpoints, one per generator
        ell_tot: Total mismatch to share, per unit

    Returns:
        SlackAllocation with shares summing to one over in-service units
    """
    setpoints = np.asarray(setpoints, dtype=float)
    if setpoints.shape != (len(generators),):
        raise DimensionMismatch("setpoints", len(generators), setpoints.shape, stage="ac")

    p_max = np.array([g.p_max for g in generators], dtype=float)
    on = np.array([g.in_service for g in generators], dtype=bool)
    pi, mode = participation_factors(p_max, on, setpoints)
    if mode is SlackMode.CAPACITY_FALLBACK:
        logger.warning("No generator headroom left, sharing slack by capacity")

    p_g = np.where(on, setpoints + pi * ell_tot, 0.0)
    return SlackAllocation(
        pi_g=tuple(pi), ell_tot=float(ell_tot), mode=mode, p_g=tuple(p_g)
    )


def single_slack_allocation(
    n_gen: int, slack_gen: int, setpoints: np.ndarray, p_slack: float
) -> SlackAllocation:
    """Allocation placing the whole mismatch on one unit."""
    pi = np.zeros(n_gen)
    pi[slack_gen] = 1.0
    p_g = np.asarray(setpoints, dtype=float).copy()
    ell = p_slack - p_g[slack_gen]
    p_g[slack_gen] = p_slack
    return SlackAllocation(
        pi_g=tuple(pi), ell_tot=float(ell), mode=SlackMode.SINGLE_SLACK, p_g=tuple(p_g)
    )
