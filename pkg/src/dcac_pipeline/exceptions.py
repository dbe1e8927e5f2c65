"""Pipeline exceptions with stage attribution."""

from __future__ import annotations

from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from .powerflow.models import PowerFlowState


class PipelineError(Exception):
    """Base exception for pipeline operations."""

    stage: str | None = None

    def __init__(
        self,
        message: str,
        stage: str | None = None,
        operation: str | None = None,
        original_error: Exception | None = None,
    ):
        """Initialize pipeline error with context."""
        super().__init__(message)
        if stage is not None:
            self.stage = stage
        self.operation = operation
        self.original_error = original_error

    def __str__(self) -> str:
        """String representation with context."""
        parts = [str(self.args[0])]
        if self.stage:
            parts.append(f"Stage: {self.stage}")
        if self.operation:
            parts.append(f"Operation: {self.operation}")
        if self.original_error:
            parts.append(
                f"Original error: {type(self.original_error).__name__}: {self.original_error}"
            )
        return " | ".join(parts)


class DimensionMismatch(PipelineError):
    """Array dimensions disagree."""

    def __init__(self, what: str, expected: Any, actual: Any, stage: str | None = None):
        """Initialize with the offending dimensions."""
        super().__init__(
            f"Dimension mismatch for {what}: expected {expected}, got {actual}",
            stage=stage,
        )
        self.what = what
        self.expected = expected
        self.actual = actual


# Case parsing and network model


class CaseError(PipelineError):
    """Network case errors."""

    stage = "parse"


class MalformedCase(CaseError):
    """Case text or data cannot be interpreted."""

    pass


class UnsupportedCost(CaseError):
    """Cost model outside the supported polynomial subset."""

    def __init__(self, row: int, model: int, ncost: int):
        """Initialize with the offending gencost row."""
        super().__init__(
            f"Unsupported generator cost in gencost row {row}: MODEL={model}, NCOST={ncost}",
            operation="parse_matpower_case",
        )
        self.row = row
        self.model = model
        self.ncost = ncost


class DanglingReference(CaseError):
    """A branch or generator refers to an unknown bus."""

    def __init__(self, element: str, bus_id: int):
        """Initialize with the referencing element."""
        super().__init__(f"{element} references unknown bus {bus_id}")
        self.element = element
        self.bus_id = bus_id


class NoRefBus(CaseError):
    """Case has no reference bus."""

    pass


class SingularBranch(CaseError):
    """In-service branch with zero impedance."""

    def __init__(self, branch: int, from_bus: int, to_bus: int):
        """Initialize with branch details."""
        super().__init__(
            f"Branch {branch} ({from_bus}->{to_bus}) has zero series impedance"
        )
        self.branch = branch


class IslandedNetwork(CaseError):
    """In-service branches do not connect every bus."""

    def __init__(self, n_islands: int):
        """Initialize with the island count."""
        super().__init__(f"Network splits into {n_islands} islands")
        self.n_islands = n_islands


class ReferenceMismatch(CaseError):
    """Reference dispatch does not describe the case it is paired with."""

    pass


# Convex solver


class SolverError(PipelineError):
    """Convex solver errors."""

    stage = "solver"


class NumericalBreakdown(SolverError):
    """KKT factorization failed after regularization retries."""

    def __init__(
        self,
        attempts: int,
        regularization: float,
        original_error: Exception | None = None,
    ):
        """Initialize with retry details."""
        super().__init__(
            f"KKT factorization failed after {attempts} attempts "
            f"(last regularization {regularization:.1e})",
            operation="solve_qp",
            original_error=original_error,
        )
        self.attempts = attempts
        self.regularization = regularization


# DC dispatch


class DispatchError(PipelineError):
    """DC dispatch errors."""

    stage = "dc"


class InfeasibleDispatch(DispatchError):
    """Generator and line limits cannot meet demand."""

    pass


class SolverFailure(DispatchError):
    """The QP behind a dispatch did not reach optimality."""

    def __init__(self, variant: str, status: str, original_error: Exception | None = None):
        """Initialize with variant and solver status."""
        super().__init__(
            f"{variant} dispatch solve ended with status {status}",
            operation=variant,
            original_error=original_error,
        )
        self.variant = variant
        self.status = status


class MissingReference(DispatchError):
    """A linearized loss model has no reference operating point."""

    pass


class CutLoopDiverged(DispatchError):
    """LQCP outer approximation did not settle."""

    def __init__(self, rounds: int, last_change: float):
        """Initialize with loop details."""
        super().__init__(
            f"LQCP cut loop did not converge in {rounds} rounds "
            f"(last loss change {last_change:.3e})",
            operation="solve_dc_lqcp",
        )
        self.rounds = rounds
        self.last_change = last_change


# AC power flow


class PowerFlowError(PipelineError):
    """AC power flow errors."""

    stage = "ac"

    def __init__(
        self,
        message: str,
        state: PowerFlowState | None = None,
        operation: str | None = None,
        original_error: Exception | None = None,
    ):
        """Initialize with the last iterate."""
        super().__init__(message, operation=operation, original_error=original_error)
        self.state = state


class Diverged(PowerFlowError):
    """Newton iterations exhausted without meeting the tolerance."""

    pass


class SwitchLimit(PowerFlowError):
    """Switching rounds exhausted with switches still pending."""

    pass


class SingularJacobian(PowerFlowError):
    """Power flow Jacobian could not be factorized."""

    pass


class NoGenerators(PowerFlowError):
    """No in-service generator can take the slack."""

    pass


# Feasibility


class FeasibilityError(PipelineError):
    """Feasibility and metric errors."""

    stage = "feasibility"


class NotConverged(FeasibilityError):
    """Violations requested for a state that did not converge."""

    pass


class ZeroReferenceCost(FeasibilityError):
    """Cost difference is undefined unless the reference cost is positive."""

    pass


# Output


class IoFailure(PipelineError):
    """Result files could not be written."""

    stage = "emit"

    def __init__(self, path: str, original_error: Exception | None = None):
        """Initialize with the target path."""
        super().__init__(
            f"Could not write {path}",
            operation="emit_results",
            original_error=original_error,
        )
        self.path = path
