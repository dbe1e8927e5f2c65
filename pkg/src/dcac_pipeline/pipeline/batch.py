"""Scenario batches and their per-variant summaries."""

from __future__ import annotations

import functools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import pandas as pd

from ..dispatch import DcVariant
from ..feasibility import ReferenceDispatch, ViolationCategory
from ..grid.model import NetworkCase
from ..powerflow import AcVariant
from ..scenarios import Scenario, ScenarioConfig, generate_batch
from .runner import PipelineOptions, PipelineRunRecord, run_variants

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BatchResult:
    """Records ordered by (sample, DC variant, AC variant) and one summary row per pair."""

    records: list[PipelineRunRecord]
    summary: pd.DataFrame

    @property
    def all_converged(self) -> bool:
        return all(r.converged for r in self.records)

    @property
    def all_succeeded(self) -> bool:
        """Every run converged and was scored."""
        return all(r.converged and r.failed_stage is None for r in self.records)


def _run_scenario(
    scenario: Scenario,
    case: NetworkCase,
    dc_variants: list[DcVariant],
    ac_variants: list[AcVariant],
    options: PipelineOptions,
    config: ScenarioConfig,
    reference: ReferenceDispatch | None,
) -> list[PipelineRunRecord]:
    provenance = options.provenance(
        seed=config.seed, sigma=config.sigma, pf_digest=scenario.pf_digest
    )
    return run_variants(
        scenario.apply(case),
        dc_variants,
        ac_variants,
        options,
        reference,
        sample=scenario.index,
        provenance=provenance,
    )


def summarize_records(records: list[PipelineRunRecord]) -> pd.DataFrame:
    """
    Per (DC, AC) pair aggregates.

    Violation, iteration, timing and quality statistics cover converged
    samples only; the sample and converged counts cover all of them.
    """
    frame = pd.DataFrame([r.to_row() for r in records])
    keys = ["case", "dc", "ac"]
    groups = frame.groupby(keys, sort=False)

    summary = groups.agg(samples=("sample", "size"), converged=("converged", "sum")).reset_index()
    summary["convergence_rate"] = summary["converged"] / summary["samples"]

    ok = frame[frame["converged"].astype(bool)]
    if ok.empty:
        return summary

    columns: dict[str, tuple[str, str]] = {}
    for c in ViolationCategory:
        name = f"viol_{c.short}"
        columns[f"{name}_sum_mean"] = (f"{name}_sum", "mean")
        columns[f"{name}_sum_min"] = (f"{name}_sum", "min")
        columns[f"{name}_sum_max"] = (f"{name}_sum", "max")
        columns[f"{name}_count_mean"] = (f"{name}_count", "mean")
    columns.update(
        inner_iters_mean=("inner_iters", "mean"),
        outer_iters_mean=("outer_iters", "mean"),
        time_s_mean=("time_s", "mean"),
        mae_mean=("mae", "mean"),
        cd_mean=("cd", "mean"),
    )
    numeric = ok.astype({src: float for src, _ in columns.values()})
    stats = numeric.groupby(keys, sort=False).agg(**columns).reset_index()
    return summary.merge(stats, on=keys, how="left")


def run_batch(
    case: NetworkCase,
    dc_variants: list[DcVariant],
    ac_variants: list[AcVariant],
    config: ScenarioConfig,
    options: PipelineOptions | None = None,
    reference: ReferenceDispatch | None = None,
    workers: int = 1,
) -> BatchResult:
    """
    Run every variant pair on every scenario of a seeded batch.

    Scenarios are spread over ``workers`` processes; records come back in
    scenario order whatever the completion order.
    """
    options = options or PipelineOptions()
    scenarios = generate_batch(case, config)
    task = functools.partial(
        _run_scenario,
        case=case,
        dc_variants=list(dc_variants),
        ac_variants=list(ac_variants),
        options=options,
        config=config,
        reference=reference,
    )

    if workers > 1 and len(scenarios) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_scenario = list(pool.map(task, scenarios))
    else:
        per_scenario = [task(s) for s in scenarios]

    records = [record for batch in per_scenario for record in batch]
    summary = summarize_records(records)
    failed = sum(1 for r in records if not r.converged)
    logger.info(
        "Batch on %s finished: %d records, %d not converged", case.name, len(records), failed
    )
    return BatchResult(records=records, summary=summary)
