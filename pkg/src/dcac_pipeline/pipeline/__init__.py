"""DC to AC pipeline orchestration and result output."""

from .batch import BatchResult, run_batch, summarize_records
from .results import (
    OutputFormat,
    build_metadata,
    emit_results,
    records_from_json,
    records_to_csv,
    records_to_json,
)
from .runner import (
    AcStart,
    AcStartPoint,
    PipelineOptions,
    PipelineRunRecord,
    Provenance,
    prepare_ac_start,
    run_ac_stage,
    run_pipeline,
    run_variants,
)

__all__ = [
    "AcStart",
    "AcStartPoint",
    "BatchResult",
    "OutputFormat",
    "PipelineOptions",
    "PipelineRunRecord",
    "Provenance",
    "build_metadata",
    "prepare_ac_start",
    "emit_results",
    "records_from_json",
    "records_to_csv",
    "records_to_json",
    "run_ac_stage",
    "run_batch",
    "run_pipeline",
    "run_variants",
    "summarize_records",
]
