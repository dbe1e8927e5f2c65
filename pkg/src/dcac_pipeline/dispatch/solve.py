"""Variant dispatcher for the DC stage."""

from __future__ import annotations

import logging

from ..grid.model import NetworkCase
from .base import solve_dc_base
from .lllf import compute_loss_factors, solve_dc_lllf
from .lossy import solve_dc_lloa, solve_dc_lqcp
from .models import DcSolution, DcVariant, LossModel

logger = logging.getLogger(__name__)


def solve_dc(
    case: NetworkCase,
    variant: DcVariant | LossModel,
    reference: DcSolution | None = None,
    tol_loss: float | None = None,
) -> DcSolution:
    """
    Solve one DC OPF variant.

    Linearized variants use ``reference`` as their operating point and fall
    back to a lossless solve at the same load when it is missing.
    """
    if isinstance(variant, LossModel):
        reference = variant.reference if reference is None else reference
        variant = variant.tag

    if variant is DcVariant.BASE:
        return solve_dc_base(case)

    if reference is None:
        logger.debug("Building %s reference from a lossless solve", variant.label)
        reference = solve_dc_base(case)

    if variant is DcVariant.LLLF:
        return solve_dc_lllf(case, compute_loss_factors(case, reference))
    if variant is DcVariant.LLOA:
        return solve_dc_lloa(case, reference)
    return solve_dc_lqcp(case, tol_loss=tol_loss, reference=reference)
