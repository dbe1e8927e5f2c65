"""Operating-limit checks on converged AC states."""

from __future__ import annotations

import logging
from enum import Enum
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..config import get_pipeline_config
from ..exceptions import NotConverged
from ..grid.matrices import branch_flows
from ..grid.model import NetworkCase
from ..powerflow.models import PowerFlowState

logger = logging.getLogger(__name__)


class ViolationCategory(str, Enum):
    """Constraint family."""

    ACTIVE = "active"
    REACTIVE = "reactive"
    VOLTAGE = "voltage"
    THERMAL = "thermal"

    @property
    def short(self) -> str:
        return {"active": "p", "reactive": "q", "voltage": "v", "thermal": "th"}[self.value]


class ViolationDetail(BaseModel):
    """One element outside its limit."""

    model_config = ConfigDict(frozen=True)

    element: str
    magnitude: float


class CategoryViolations(BaseModel):
    """Aggregated violations of one category."""

    model_config = ConfigDict(frozen=True)

    count: int = 0
    max_violation: float = 0.0
    sum_violation: float = 0.0
    details: tuple[ViolationDetail, ...] = ()

    @classmethod
    def from_details(cls, details: list[ViolationDetail]) -> CategoryViolations:
        magnitudes = [d.magnitude for d in details]
        return cls(
            count=len(details),
            max_violation=max(magnitudes, default=0.0),
            sum_violation=float(sum(magnitudes)),
            details=tuple(details),
        )


class ViolationReport(BaseModel):
    """Violations per category. Thermal magnitudes are percent of rating, the rest p.u."""

    model_config = ConfigDict(frozen=True)

    active: CategoryViolations = CategoryViolations()
    reactive: CategoryViolations = CategoryViolations()
    voltage: CategoryViolations = CategoryViolations()
    thermal: CategoryViolations = CategoryViolations()

    def category(self, category: ViolationCategory) -> CategoryViolations:
        return getattr(self, category.value)

    @property
    def total_count(self) -> int:
        return sum(self.category(c).count for c in ViolationCategory)

    @property
    def is_feasible(self) -> bool:
        return self.total_count == 0

    def flat(self) -> dict[str, float | int]:
        """Columns ``viol_{p,q,v,th}_{count,max,sum}``."""
        out: dict[str, float | int] = {}
        for c in ViolationCategory:
            agg = self.category(c)
            out[f"viol_{c.short}_count"] = agg.count
            out[f"viol_{c.short}_max"] = agg.max_violation
            out[f"viol_{c.short}_sum"] = agg.sum_violation
        return out

    def to_rows(self, dc_variant: str, ac_variant: str) -> list[dict[str, Any]]:
        """One row per category for tabular output."""
        return [
            {
                "dc_variant": dc_variant,
                "ac_variant": ac_variant,
                "category": c.value,
                "count": self.category(c).count,
                "max": self.category(c).max_violation,
                "sum": self.category(c).sum_violation,
            }
            for c in ViolationCategory
        ]


def _collect(
    names: list[str], excess: np.ndarray, floor: float, mask: np.ndarray | None = None
) -> CategoryViolations:
    keep = excess > floor
    if mask is not None:
        keep &= mask
    return CategoryViolations.from_details(
        [
            ViolationDetail(element=names[i], magnitude=float(excess[i]))
            for i in np.flatnonzero(keep)
        ]
    )


def _band_excess(value: np.ndarray, low: np.ndarray, high: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        excess = np.maximum(np.maximum(value - high, low - value), 0.0)
    return np.nan_to_num(excess, nan=0.0)


def check_violations(
    case: NetworkCase,
    state: PowerFlowState,
    reactive_deadband: float = 0.0,
    threshold: float | None = None,
    thermal_threshold: float | None = None,
) -> ViolationReport:
    """
    Compare a converged state against generator, voltage and branch limits.

    Magnitudes at or below ``threshold`` (``thermal_threshold`` percent for
    branches) count as zero. Reactive excesses must also exceed
    ``reactive_deadband``; the recorded magnitude is still the full excess.

    Raises:
        NotConverged: The state is not a converged solution
    """
    if not state.converged:
        raise NotConverged(
            f"Cannot check limits on a non-converged state of {case.name}",
            operation="check_violations",
        )
    config = get_pipeline_config()
    threshold = config.violation_threshold if threshold is None else threshold
    if thermal_threshold is None:
        thermal_threshold = config.thermal_threshold_pct

    arr = case.arrays
    gen_names = [f"gen {k + 1} (bus {arr.bus_ids[arr.gen_bus[k]]})" for k in range(arr.n_gen)]
    bus_names = [f"bus {i}" for i in arr.bus_ids]
    br_names = [
        f"branch {k + 1} ({arr.bus_ids[arr.f[k]]}-{arr.bus_ids[arr.t[k]]})"
        for k in range(arr.n_branch)
    ]

    p_g, q_g = np.asarray(state.p_g), np.asarray(state.q_g)
    vm, va = np.asarray(state.vm), np.asarray(state.va)

    active = _collect(gen_names, _band_excess(p_g, arr.pmin, arr.pmax), threshold, arr.gen_on)
    reactive = _collect(
        gen_names, _band_excess(q_g, arr.qmin, arr.qmax), reactive_deadband + threshold, arr.gen_on
    )
    voltage = _collect(bus_names, _band_excess(vm, arr.vmin, arr.vmax), threshold)

    flows = branch_flows(case, vm, va)
    s_max = np.maximum(np.abs(flows.s_from), np.abs(flows.s_to))
    limited = arr.br_on & (arr.rate > 0)
    rate = np.where(limited, arr.rate, 1.0)
    overload = np.where(limited, (s_max - rate) / rate * 100.0, 0.0)
    thermal = _collect(br_names, np.maximum(overload, 0.0), thermal_threshold, limited)

    report = ViolationReport(active=active, reactive=reactive, voltage=voltage, thermal=thermal)
    logger.debug(
        "Violations for %s: P %d, Q %d, V %d, thermal %d",
        case.name,
        active.count,
        reactive.count,
        voltage.count,
        thermal.count,
    )
    return report
