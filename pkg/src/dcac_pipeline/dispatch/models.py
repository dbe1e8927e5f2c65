"""DC dispatch result and input models."""

from __future__ import annotations

from enum import Enum
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class DcVariant(str, Enum):
    """Loss treatment of a DC optimal power flow."""

    BASE = "base"
    LLLF = "lllf"
    LQCP = "lqcp"
    LLOA = "lloa"

    @property
    def label(self) -> str:
        return f"DC_{self.name}"

    @property
    def needs_reference(self) -> bool:
        """Whether the loss model is linearized around a prior solution."""
        return self in (DcVariant.LLLF, DcVariant.LLOA)


class DcSolution(BaseModel):
    """Solved DC dispatch, per-unit."""

    model_config = ConfigDict(frozen=True)

    p_g_sp: tuple[float, ...]
    theta_dc: tuple[float, ...]
    branch_flows: tuple[float, ...] = Field(description="Flow entering at the from end")
    branch_flows_to: tuple[float, ...] = Field(description="Flow entering at the to end")
    modeled_losses: float = 0.0
    objective: float
    loss_model: DcVariant
    iterations: int = 0
    cut_rounds: int = 0

    @property
    def p_g(self) -> np.ndarray:
        return np.asarray(self.p_g_sp)

    @property
    def theta(self) -> np.ndarray:
        return np.asarray(self.theta_dc)

    @property
    def flows(self) -> np.ndarray:
        return np.asarray(self.branch_flows)

    def to_mw_dict(self, base_mva: float) -> dict[str, Any]:
        """JSON-ready view in MW."""
        return {
            "loss_model": self.loss_model.label,
            "objective": self.objective,
            "p_g_mw": [p * base_mva for p in self.p_g_sp],
            "branch_flows_mw": [f * base_mva for f in self.branch_flows],
            "branch_flows_to_mw": [f * base_mva for f in self.branch_flows_to],
            "modeled_losses_mw": self.modeled_losses * base_mva,
        }


class LossModel(BaseModel):
    """Loss treatment plus the operating point it is linearized around."""

    model_config = ConfigDict(frozen=True)

    tag: DcVariant = DcVariant.BASE
    reference: DcSolution | None = None


class LossFactors(BaseModel):
    """Linear loss sensitivities around a reference dispatch."""

    model_config = ConfigDict(frozen=True)

    lam: tuple[float, ...] = Field(
        serialization_alias="lambda",
        description="Loss sensitivity to net withdrawal per bus",
    )
    ell_ref: float
    ref_flows: tuple[float, ...]
    ref_withdrawal: tuple[float, ...]
    slack_bus: int

    @property
    def lam_vector(self) -> np.ndarray:
        return np.asarray(self.lam)

    def losses_at(self, withdrawal: np.ndarray) -> float:
        """Linearized total losses for a withdrawal vector."""
        return float(self.ell_ref + self.lam_vector @ withdrawal)
