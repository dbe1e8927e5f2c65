"""DC dispatch followed by AC power flow, one scenario at a time."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..dispatch import DcSolution, DcVariant, solve_dc, solve_dc_base
from ..exceptions import (
    DispatchError,
    FeasibilityError,
    PipelineError,
    PowerFlowError,
    SolverError,
)
from ..feasibility import (
    ReferenceDispatch,
    ViolationReport,
    check_violations,
    compute_cost_difference,
    compute_mae,
    dispatch_cost,
)
from ..grid.model import NetworkCase
from ..metrics import get_pipeline_metrics
from ..powerflow import (
    AcVariant,
    PowerFlowState,
    SolverOptions,
    WarmStart,
    network_losses,
    run_acpf,
)

logger = logging.getLogger(__name__)


class AcStart(str, Enum):
    """Starting voltages for the AC stage."""

    FLAT = "flat"
    ACBASE = "acbase"


class Provenance(BaseModel):
    """Inputs needed to reproduce a record."""

    model_config = ConfigDict(frozen=True)

    seed: int | None = None
    sigma: float | None = None
    pf_digest: str | None = None
    tol: float
    eps_q: float
    eps_v: float
    max_inner: int
    max_outer: int


class PipelineOptions(BaseModel):
    """Settings shared by every run of a batch."""

    model_config = ConfigDict(frozen=True)

    solver: SolverOptions = Field(default_factory=SolverOptions)
    ac_start: AcStart = AcStart.FLAT
    tol_loss: float | None = None

    def provenance(
        self,
        seed: int | None = None,
        sigma: float | None = None,
        pf_digest: str | None = None,
    ) -> Provenance:
        return Provenance(
            seed=seed,
            sigma=sigma,
            pf_digest=pf_digest,
            tol=self.solver.tol,
            eps_q=self.solver.eps_q,
            eps_v=self.solver.eps_v,
            max_inner=self.solver.max_inner,
            max_outer=self.solver.max_outer,
        )


class PipelineRunRecord(BaseModel):
    """Outcome of one (scenario, DC variant, AC variant) run."""

    model_config = ConfigDict(frozen=True)

    case: str
    dc: DcVariant
    ac: AcVariant
    sample: int = 0
    converged: bool = False
    failed_stage: str | None = None
    error: str | None = None
    inner_iters: int = 0
    outer_iters: int = 0
    violations: ViolationReport | None = None
    dc_objective: float | None = None
    cost: float | None = None
    ac_losses: float | None = None
    mae: float | None = None
    cd: float | None = None
    time_s: float | None = None
    provenance: Provenance

    def to_row(self, include_timings: bool = True) -> dict[str, Any]:
        """Flat row for tabular output."""
        row: dict[str, Any] = {
            "case": self.case,
            "dc": self.dc.label,
            "ac": self.ac.label,
            "sample": self.sample,
            "converged": self.converged,
            "inner_iters": self.inner_iters,
            "outer_iters": self.outer_iters,
        }
        if self.violations is not None:
            row.update(self.violations.flat())
        else:
            row.update({k: None for k in ViolationReport().flat()})
        row["mae"] = self.mae
        row["cd"] = self.cd
        row["time_s"] = self.time_s if include_timings else None
        row["failed_stage"] = self.failed_stage
        return row


@dataclass(frozen=True)
class AcStartPoint:
    """Solver options for the AC stage plus the work spent preparing them."""

    solver: SolverOptions
    iterations: int = 0
    seconds: float = 0.0


def prepare_ac_start(
    case: NetworkCase, setpoints: np.ndarray, options: PipelineOptions
) -> AcStartPoint:
    """
    Starting point shared by every AC variant run on one dispatch.

    Under the AC_BASE warm start the base power flow is solved once here;
    its iterations and time are charged to every record that starts from it.
    """
    if options.ac_start is not AcStart.ACBASE:
        return AcStartPoint(options.solver)
    started = time.perf_counter()
    try:
        start = run_acpf(case, setpoints, AcVariant.BASE, options.solver)
    except PowerFlowError as e:
        logger.warning("AC_BASE warm start failed for %s, starting flat: %s", case.name, e.args[0])
        iterations = e.state.inner_iters if e.state is not None else 0
        return AcStartPoint(options.solver, iterations, time.perf_counter() - started)
    solver = options.solver.model_copy(
        update={"warm_start": WarmStart.FROM_STATE, "initial_state": start}
    )
    return AcStartPoint(solver, start.inner_iters, time.perf_counter() - started)


def run_ac_stage(
    case: NetworkCase,
    dc_solution: DcSolution,
    dc_variant: DcVariant,
    ac_variant: AcVariant,
    options: PipelineOptions,
    reference: ReferenceDispatch | None = None,
    sample: int = 0,
    provenance: Provenance | None = None,
    dc_seconds: float = 0.0,
    start: AcStartPoint | None = None,
) -> PipelineRunRecord:
    """
    Run the AC power flow on a DC dispatch and score the result.

    Power flow failures and scoring failures are returned as records naming
    the failed stage.
    """
    provenance = provenance or options.provenance()
    metrics = get_pipeline_metrics()
    setpoints = dc_solution.p_g
    start = start or prepare_ac_start(case, setpoints, options)
    started = time.perf_counter() - start.seconds
    fields: dict[str, Any] = {
        "case": case.name,
        "dc": dc_variant,
        "ac": ac_variant,
        "sample": sample,
        "dc_objective": dc_solution.objective,
        "provenance": provenance,
    }

    try:
        with metrics.record_stage("ac", ac_variant.label):
            state: PowerFlowState = run_acpf(case, setpoints, ac_variant, start.solver)
    except PowerFlowError as e:
        if e.state is not None:
            fields["inner_iters"] = e.state.inner_iters + start.iterations
            fields["outer_iters"] = e.state.outer_iters
        return PipelineRunRecord(
            **fields,
            failed_stage=e.stage,
            error=str(e),
            time_s=dc_seconds + time.perf_counter() - started,
        )

    deadband = options.solver.eps_q if ac_variant.switching else 0.0
    p_g = np.asarray(state.p_g)
    cost = dispatch_cost(case, p_g)
    fields.update(
        converged=True,
        inner_iters=state.inner_iters + start.iterations,
        outer_iters=state.outer_iters,
        cost=cost,
        ac_losses=network_losses(case, state),
    )
    try:
        with metrics.record_stage("feasibility", ac_variant.label):
            fields["violations"] = check_violations(case, state, reactive_deadband=deadband)
            if reference is not None:
                fields["mae"] = compute_mae(p_g, reference)
                fields["cd"] = compute_cost_difference(cost, reference)
    except FeasibilityError as e:
        logger.warning(
            "Scoring %s -> %s on %s sample %d failed: %s",
            dc_variant.label,
            ac_variant.label,
            case.name,
            sample,
            e,
        )
        return PipelineRunRecord(
            **fields,
            failed_stage=e.stage,
            error=str(e),
            time_s=dc_seconds + time.perf_counter() - started,
        )

    record = PipelineRunRecord(**fields, time_s=dc_seconds + time.perf_counter() - started)
    logger.info(
        "%s -> %s on %s sample %d: %d violations, cost %.2f $/h",
        dc_variant.label,
        ac_variant.label,
        case.name,
        sample,
        record.violations.total_count,
        cost,
    )
    return record


def _dc_failure(
    case: NetworkCase,
    dc_variant: DcVariant,
    ac_variants: list[AcVariant],
    error: PipelineError,
    sample: int,
    provenance: Provenance,
    seconds: float,
) -> list[PipelineRunRecord]:
    return [
        PipelineRunRecord(
            case=case.name,
            dc=dc_variant,
            ac=ac,
            sample=sample,
            failed_stage="dc",
            error=str(error),
            time_s=seconds,
            provenance=provenance,
        )
        for ac in ac_variants
    ]


def run_variants(
    case: NetworkCase,
    dc_variants: list[DcVariant],
    ac_variants: list[AcVariant],
    options: PipelineOptions | None = None,
    reference: ReferenceDispatch | None = None,
    sample: int = 0,
    provenance: Provenance | None = None,
) -> list[PipelineRunRecord]:
    """
    Every (DC, AC) pair on one load instance.

    A single lossless DC solve serves as the operating point of every
    linearized DC variant. Records are ordered by DC variant, then AC variant.
    """
    options = options or PipelineOptions()
    provenance = provenance or options.provenance()
    metrics = get_pipeline_metrics()
    records: list[PipelineRunRecord] = []

    base: DcSolution | None = None
    base_seconds = 0.0
    for dc_variant in dc_variants:
        started = time.perf_counter()
        try:
            with metrics.record_stage("dc", dc_variant.label):
                if base is None and (dc_variant is DcVariant.BASE or dc_variant.needs_reference):
                    base = solve_dc_base(case)
                    base_seconds = time.perf_counter() - started
                if dc_variant is DcVariant.BASE:
                    solution = base
                else:
                    solution = solve_dc(case, dc_variant, reference=base, tol_loss=options.tol_loss)
        except (DispatchError, SolverError) as e:
            logger.warning("%s failed on %s sample %d: %s", dc_variant.label, case.name, sample, e)
            seconds = time.perf_counter() - started
            records.extend(
                _dc_failure(case, dc_variant, ac_variants, e, sample, provenance, seconds)
            )
            continue

        dc_seconds = time.perf_counter() - started
        if dc_variant is DcVariant.BASE:
            dc_seconds = base_seconds
        start = prepare_ac_start(case, solution.p_g, options)
        for ac_variant in ac_variants:
            records.append(
                run_ac_stage(
                    case, solution, dc_variant, ac_variant, options, reference,
                    sample=sample, provenance=provenance, dc_seconds=dc_seconds,
                    start=start,
                )
            )
    return records


def run_pipeline(
    case: NetworkCase,
    dc_variant: DcVariant,
    ac_variant: AcVariant,
    options: PipelineOptions | None = None,
    reference: ReferenceDispatch | None = None,
) -> PipelineRunRecord:
    """
    One DC dispatch followed by one AC power flow.

    DC, AC and scoring failures are returned as records naming the failed
    stage; case errors propagate.
    """
    return run_variants(case, [dc_variant], [ac_variant], options, reference)[0]
