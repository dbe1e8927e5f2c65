"""Per-unit network model."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..exceptions import DanglingReference, MalformedCase, NoRefBus

logger = logging.getLogger(__name__)


class BusRole(str, Enum):
    """Bus type as used by the power flow."""

    PQ = "PQ"
    PV = "PV"
    REF = "REF"

    @classmethod
    def from_matpower(cls, code: int) -> BusRole:
        """Map a MATPOWER BUS_TYPE code."""
        try:
            return {1: cls.PQ, 2: cls.PV, 3: cls.REF}[code]
        except KeyError as e:
            raise MalformedCase(f"Unsupported bus type {code}") from e


# Integer codes used in the array view and solver arrays
PQ_CODE, PV_CODE, REF_CODE = 1, 2, 3
ROLE_CODES = {BusRole.PQ: PQ_CODE, BusRole.PV: PV_CODE, BusRole.REF: REF_CODE}
ROLES_BY_CODE = {code: role for role, code in ROLE_CODES.items()}


class CostCurve(BaseModel):
    """Quadratic generation cost evaluated on MW."""

    model_config = ConfigDict(frozen=True)

    c2: float = Field(default=0.0, ge=0, description="$/MW^2h")
    c1: float = Field(default=0.0, description="$/MWh")
    c0: float = Field(default=0.0, description="$/h")

    def evaluate(self, p_mw: float) -> float:
        """Cost at an output in MW."""
        return self.c2 * p_mw * p_mw + self.c1 * p_mw + self.c0


class Bus(BaseModel):
    """Network bus, quantities in per-unit."""

    model_config = ConfigDict(frozen=True)

    id: int
    role: BusRole
    p_d: float = 0.0
    q_d: float = 0.0
    gs: float = 0.0
    bs: float = 0.0
    vm_init: float = 1.0
    va_init: float = 0.0
    v_min: float = Field(default=0.9, gt=0)
    v_max: float = Field(default=1.1, gt=0)

    @model_validator(mode="after")
    def _check_voltage_band(self) -> Bus:
        if self.v_min > self.v_max:
            raise ValueError(f"Bus {self.id}: v_min {self.v_min} exceeds v_max {self.v_max}")
        if not self.v_min <= self.vm_init <= self.v_max:
            logger.warning(
                "Bus %d initial voltage %.4f outside [%.4f, %.4f]",
                self.id,
                self.vm_init,
                self.v_min,
                self.v_max,
            )
        return self


class Branch(BaseModel):
    """Line or transformer, impedances in per-unit."""

    model_config = ConfigDict(frozen=True)

    from_bus: int
    to_bus: int
    r: float = 0.0
    x: float = 0.0
    b_charge: float = 0.0
    rate_a: float = Field(default=0.0, ge=0, description="0 means unlimited")
    tap: float = 1.0
    shift: float = Field(default=0.0, description="Phase shift (rad)")
    in_service: bool = True

    @field_validator("tap")
    @classmethod
    def _nominal_tap(cls, v: float) -> float:
        return 1.0 if v == 0 else v

    @property
    def is_limited(self) -> bool:
        """Whether a thermal limit applies."""
        return self.rate_a > 0


class Generator(BaseModel):
    """Generating unit, quantities in per-unit."""

    model_config = ConfigDict(frozen=True)

    bus: int
    p_g: float = 0.0
    q_g: float = 0.0
    p_min: float = 0.0
    p_max: float = 0.0
    q_min: float = -float("inf")
    q_max: float = float("inf")
    v_setpoint: float = 1.0
    in_service: bool = True
    cost: CostCurve = Field(default_factory=CostCurve)

    @model_validator(mode="after")
    def _check_limits(self) -> Generator:
        if self.p_min > self.p_max:
            raise ValueError(f"Generator at bus {self.bus}: p_min exceeds p_max")
        if self.q_min > self.q_max:
            raise ValueError(f"Generator at bus {self.bus}: q_min exceeds q_max")
        return self


@dataclass(frozen=True)
class CaseArrays:
    """Positional numpy view of a case, built once per case."""

    base_mva: float
    bus_ids: np.ndarray
    bus_type: np.ndarray
    ref: int
    pd: np.ndarray
    qd: np.ndarray
    gs: np.ndarray
    bs: np.ndarray
    vm0: np.ndarray
    va0: np.ndarray
    vmin: np.ndarray
    vmax: np.ndarray
    f: np.ndarray
    t: np.ndarray
    r: np.ndarray
    x: np.ndarray
    b: np.ndarray
    rate: np.ndarray
    tap: np.ndarray
    shift: np.ndarray
    br_on: np.ndarray
    gen_bus: np.ndarray
    pg: np.ndarray
    qg: np.ndarray
    pmin: np.ndarray
    pmax: np.ndarray
    qmin: np.ndarray
    qmax: np.ndarray
    vg: np.ndarray
    gen_on: np.ndarray
    c2: np.ndarray
    c1: np.ndarray
    c0: np.ndarray

    @property
    def n_bus(self) -> int:
        return len(self.bus_ids)

    @property
    def n_branch(self) -> int:
        return len(self.f)

    @property
    def n_gen(self) -> int:
        return len(self.gen_bus)


class NetworkCase(BaseModel):
    """Immutable per-unit grid model."""

    model_config = ConfigDict(frozen=True)

    name: str
    base_mva: float = Field(default=100.0, gt=0)
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...] = ()
    generators: tuple[Generator, ...] = ()

    @model_validator(mode="after")
    def _check_topology(self) -> NetworkCase:
        ids = [bus.id for bus in self.buses]
        if len(set(ids)) != len(ids):
            raise MalformedCase(f"Case {self.name} has duplicate bus identifiers")
        known = set(ids)
        for k, branch in enumerate(self.branches):
            for end in (branch.from_bus, branch.to_bus):
                if end not in known:
                    raise DanglingReference(f"Branch {k + 1}", end)
        for k, gen in enumerate(self.generators):
            if gen.bus not in known:
                raise DanglingReference(f"Generator {k + 1}", gen.bus)

        n_ref = sum(1 for bus in self.buses if bus.role is BusRole.REF)
        if n_ref == 0:
            raise NoRefBus(f"Case {self.name} has no reference bus")
        if n_ref > 1:
            raise MalformedCase(f"Case {self.name} has {n_ref} reference buses")
        return self

    @property
    def ref_bus(self) -> int:
        """Identifier of the reference bus."""
        return next(bus.id for bus in self.buses if bus.role is BusRole.REF)

    def bus_position(self, bus_id: int) -> int:
        """Row position of a bus identifier."""
        return self.bus_positions[bus_id]

    @cached_property
    def bus_positions(self) -> dict[int, int]:
        """Map from bus identifier to row position."""
        return {bus.id: pos for pos, bus in enumerate(self.buses)}

    @cached_property
    def arrays(self) -> CaseArrays:
        """Positional array view used by the numerical modules."""
        pos = self.bus_positions
        buses, branches, gens = self.buses, self.branches, self.generators

        def col(items, attr) -> np.ndarray:
            return np.array([getattr(item, attr) for item in items], dtype=float)

        return CaseArrays(
            base_mva=self.base_mva,
            bus_ids=np.array([b.id for b in buses], dtype=int),
            bus_type=np.array([ROLE_CODES[b.role] for b in buses], dtype=int),
            ref=pos[self.ref_bus],
            pd=col(buses, "p_d"),
            qd=col(buses, "q_d"),
            gs=col(buses, "gs"),
            bs=col(buses, "bs"),
            vm0=col(buses, "vm_init"),
            va0=col(buses, "va_init"),
            vmin=col(buses, "v_min"),
            vmax=col(buses, "v_max"),
            f=np.array([pos[br.from_bus] for br in branches], dtype=int),
            t=np.array([pos[br.to_bus] for br in branches], dtype=int),
            r=col(branches, "r"),
            x=col(branches, "x"),
            b=col(branches, "b_charge"),
            rate=col(branches, "rate_a"),
            tap=col(branches, "tap"),
            shift=col(branches, "shift"),
            br_on=np.array([br.in_service for br in branches], dtype=bool),
            gen_bus=np.array([pos[g.bus] for g in gens], dtype=int),
            pg=col(gens, "p_g"),
            qg=col(gens, "q_g"),
            pmin=col(gens, "p_min"),
            pmax=col(gens, "p_max"),
            qmin=col(gens, "q_min"),
            qmax=col(gens, "q_max"),
            vg=col(gens, "v_setpoint"),
            gen_on=np.array([g.in_service for g in gens], dtype=bool),
            c2=np.array([g.cost.c2 for g in gens], dtype=float),
            c1=np.array([g.cost.c1 for g in gens], dtype=float),
            c0=np.array([g.cost.c0 for g in gens], dtype=float),
        )

    def with_loads(self, p_d: np.ndarray, q_d: np.ndarray) -> NetworkCase:
        """Copy of the case with replaced per-unit bus demand."""
        if len(p_d) != len(self.buses) or len(q_d) != len(self.buses):
            raise MalformedCase(
                f"Load vectors must have {len(self.buses)} entries, "
                f"got {len(p_d)} and {len(q_d)}"
            )
        buses = tuple(
            bus.model_copy(update={"p_d": float(p), "q_d": float(q)})
            for bus, p, q in zip(self.buses, p_d, q_d, strict=True)
        )
        # Rebuilt through the constructor so cached arrays are not carried over
        return NetworkCase(
            name=self.name,
            base_mva=self.base_mva,
            buses=buses,
            branches=self.branches,
            generators=self.generators,
        )

    def generation_cost(self, p_g: np.ndarray) -> float:
        """Hourly cost of a per-unit dispatch over in-service generators."""
        arr = self.arrays
        p_mw = np.asarray(p_g, dtype=float) * self.base_mva
        cost = arr.c2 * p_mw * p_mw + arr.c1 * p_mw + arr.c0
        return float(np.sum(cost[arr.gen_on]))

    def summary(self) -> dict[str, Any]:
        """Element counts and total demand."""
        return {
            "name": self.name,
            "base_mva": self.base_mva,
            "buses": len(self.buses),
            "branches": len(self.branches),
            "branches_in_service": sum(1 for br in self.branches if br.in_service),
            "generators": len(self.generators),
            "generators_in_service": sum(1 for g in self.generators if g.in_service),
            "total_p_d_mw": sum(bus.p_d for bus in self.buses) * self.base_mva,
            "total_q_d_mvar": sum(bus.q_d for bus in self.buses) * self.base_mva,
        }
