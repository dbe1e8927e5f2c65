"""AC power flow options, allocation and state models."""

from __future__ import annotations

from enum import Enum
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..config import get_pipeline_config
from ..grid.model import ROLE_CODES, ROLES_BY_CODE, BusRole


class AcVariant(str, Enum):
    """AC power flow variant."""

    BASE = "base"
    BTS = "bts"
    DS = "ds"
    SPF = "spf"

    @property
    def label(self) -> str:
        return f"AC_{self.name}"

    @property
    def distributed_slack(self) -> bool:
        return self in (AcVariant.DS, AcVariant.SPF)

    @property
    def switching(self) -> bool:
        return self in (AcVariant.BTS, AcVariant.SPF)


class WarmStart(str, Enum):
    """Initial voltage policy."""

    FLAT = "flat"
    FROM_STATE = "from_state"


class ParticipationUpdate(str, Enum):
    """When distributed-slack participation factors are recomputed."""

    OUTER = "outer"
    INNER = "inner"


class SlackMode(str, Enum):
    """How the active-power mismatch is shared."""

    HEADROOM = "Headroom"
    CAPACITY_FALLBACK = "CapacityFallback"
    SINGLE_SLACK = "SingleSlack"


class ClampState(str, Enum):
    """Reactive limit state of a generator."""

    FREE = "Free"
    AT_QMAX = "AtQmax"
    AT_QMIN = "AtQmin"


# Clamp states as held in solver arrays
FREE_CODE, AT_QMAX_CODE, AT_QMIN_CODE = 0, 1, 2
CLAMP_CODES = {
    ClampState.FREE: FREE_CODE,
    ClampState.AT_QMAX: AT_QMAX_CODE,
    ClampState.AT_QMIN: AT_QMIN_CODE,
}
CLAMPS_BY_CODE = {code: state for state, code in CLAMP_CODES.items()}


def roles_from_codes(codes: np.ndarray) -> tuple[BusRole, ...]:
    return tuple(ROLES_BY_CODE[int(c)] for c in codes)


def clamps_from_codes(codes: np.ndarray) -> tuple[ClampState, ...]:
    return tuple(CLAMPS_BY_CODE[int(c)] for c in codes)


class SlackAllocation(BaseModel):
    """Participation of each generator in the active-power mismatch."""

    model_config = ConfigDict(frozen=True)

    pi_g: tuple[float, ...]
    ell_tot: float = 0.0
    mode: SlackMode
    p_g: tuple[float, ...] = Field(description="Setpoints plus allocated share")

    @property
    def pi(self) -> np.ndarray:
        return np.asarray(self.pi_g)


class PowerFlowState(BaseModel):
    """AC operating point with iteration bookkeeping."""

    model_config = ConfigDict(frozen=True)

    vm: tuple[float, ...]
    va: tuple[float, ...]
    p_g: tuple[float, ...]
    q_g: tuple[float, ...]
    bus_types: tuple[BusRole, ...]
    clamp: tuple[ClampState, ...]
    converged: bool = False
    inner_iters: int = 0
    outer_iters: int = 0
    switch_count: int = 0
    mismatch: float = float("inf")
    allocation: SlackAllocation

    @property
    def voltage(self) -> np.ndarray:
        """Complex bus voltages."""
        return np.asarray(self.vm) * np.exp(1j * np.asarray(self.va))

    def role_codes(self) -> np.ndarray:
        """Bus types as integer codes."""
        return np.array([ROLE_CODES[t] for t in self.bus_types], dtype=int)

    def clamp_codes(self) -> np.ndarray:
        """Generator clamp states as integer codes."""
        return np.array([CLAMP_CODES[c] for c in self.clamp], dtype=int)

    def to_json_dict(self) -> dict[str, Any]:
        """JSON-ready view of the state."""
        return {
            "vm": list(self.vm),
            "va": list(self.va),
            "p_g": list(self.p_g),
            "q_g": list(self.q_g),
            "bus_types": [t.value for t in self.bus_types],
            "clamp": [c.value for c in self.clamp],
            "converged": self.converged,
            "inner_iters": self.inner_iters,
            "outer_iters": self.outer_iters,
            "allocation_mode": self.allocation.mode.value,
            "ell_tot": self.allocation.ell_tot,
        }


class SolverOptions(BaseModel):
    """Newton-Raphson and switching settings; defaults come from PipelineConfig."""

    model_config = ConfigDict(frozen=True)

    tol: float = Field(default_factory=lambda: get_pipeline_config().pf_tol, gt=0)
    eps_q: float = Field(default_factory=lambda: get_pipeline_config().eps_q, gt=0)
    eps_v: float = Field(default_factory=lambda: get_pipeline_config().eps_v, gt=0)
    max_inner: int = Field(default_factory=lambda: get_pipeline_config().max_inner, ge=1)
    max_outer: int = Field(default_factory=lambda: get_pipeline_config().max_outer, ge=1)
    warm_start: WarmStart = WarmStart.FLAT
    initial_state: PowerFlowState | None = None
    participation_update: ParticipationUpdate = ParticipationUpdate.OUTER
    hold_nominal_voltage: bool = False

    @model_validator(mode="after")
    def _check_warm_start(self) -> SolverOptions:
        if self.warm_start is WarmStart.FROM_STATE and self.initial_state is None:
            raise ValueError("warm_start=from_state needs initial_state")
        return self
