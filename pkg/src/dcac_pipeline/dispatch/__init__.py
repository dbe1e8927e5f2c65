"""DC optimal power flow variants."""

from .base import solve_dc_base
from .lllf import compute_loss_factors, solve_dc_lllf
from .lossy import DirectedFlowModel, solve_dc_lloa, solve_dc_lqcp
from .models import DcSolution, DcVariant, LossFactors, LossModel
from .solve import solve_dc

__all__ = [
    # Models
    "DcSolution",
    "DcVariant",
    "LossFactors",
    "LossModel",
    # Variants
    "DirectedFlowModel",
    "compute_loss_factors",
    "solve_dc",
    "solve_dc_base",
    "solve_dc_lllf",
    "solve_dc_lloa",
    "solve_dc_lqcp",
]
