"""AC power flow variants."""

from .models import (
    CLAMP_CODES,
    CLAMPS_BY_CODE,
    AcVariant,
    ClampState,
    ParticipationUpdate,
    PowerFlowState,
    SlackAllocation,
    SlackMode,
    SolverOptions,
    WarmStart,
)
from .newton import BusLayout, NewtonSolver, build_jacobian, bus_layout, compute_mismatch
from .slack import distribute_slack, participation_factors
from .solve import network_losses, reactive_by_bus, run_acpf
from .switching import initial_bus_types, switching_round, voltage_setpoints

__all__ = [
    # Models
    "CLAMP_CODES",
    "CLAMPS_BY_CODE",
    "AcVariant",
    "ClampState",
    "ParticipationUpdate",
    "PowerFlowState",
    "SlackAllocation",
    "SlackMode",
    "SolverOptions",
    "WarmStart",
    # Newton
    "BusLayout",
    "NewtonSolver",
    "build_jacobian",
    "bus_layout",
    "compute_mismatch",
    # Slack and switching
    "distribute_slack",
    "participation_factors",
    "initial_bus_types",
    "switching_round",
    "voltage_setpoints",
    # Driver
    "network_losses",
    "reactive_by_bus",
    "run_acpf",
]
