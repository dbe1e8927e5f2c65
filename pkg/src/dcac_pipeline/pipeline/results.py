"""Result files: CSV with a metadata comment line, or a single JSON document."""

from __future__ import annotations

import io
import json
import logging
from enum import Enum
from pathlib import Path
from typing import Any

import pandas as pd

from .. import __version__
from ..config import get_pipeline_config
from ..dispatch import DcVariant
from ..powerflow import AcVariant
from ..scenarios import RNG_ALGORITHM, ScenarioConfig
from ..utils.retry import io_retry
from .runner import PipelineOptions, PipelineRunRecord

logger = logging.getLogger(__name__)

RECORDS_STEM = "records"
SUMMARY_STEM = "summary"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


def build_metadata(
    case_name: str,
    dc_variants: list[DcVariant],
    ac_variants: list[AcVariant],
    scenario_config: ScenarioConfig,
    options: PipelineOptions,
) -> dict[str, Any]:
    """Run settings needed to reproduce a result set."""
    config = get_pipeline_config()
    return {
        "case": case_name,
        "dc_variants": [v.label for v in dc_variants],
        "ac_variants": [v.label for v in ac_variants],
        "seed": scenario_config.seed,
        "sigma": scenario_config.sigma,
        "pf_min": scenario_config.pf_min,
        "pf_max": scenario_config.pf_max,
        "samples": scenario_config.n_samples,
        "nominal": scenario_config.nominal,
        "rng": RNG_ALGORITHM,
        "tol": options.solver.tol,
        "eps_q": options.solver.eps_q,
        "eps_v": options.solver.eps_v,
        "max_inner": options.solver.max_inner,
        "max_outer": options.solver.max_outer,
        "ac_start": options.ac_start.value,
        "loss_tol": options.tol_loss if options.tol_loss is not None else config.loss_tol,
        "qp_tol": config.qp_tol,
        "version": __version__,
    }


def _dumps(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def records_to_json(
    records: list[PipelineRunRecord], metadata: dict[str, Any], include_timings: bool = True
) -> str:
    """Canonical JSON document of a result set."""
    rows = []
    for record in records:
        row = record.model_dump(mode="json")
        if not include_timings:
            row["time_s"] = None
        rows.append(row)
    return _dumps({"metadata": metadata, "records": rows})


def records_from_json(text: str) -> tuple[dict[str, Any], list[PipelineRunRecord]]:
    """Parse a document written by :func:`records_to_json`."""
    payload = json.loads(text)
    return payload["metadata"], [PipelineRunRecord.model_validate(r) for r in payload["records"]]


def records_to_csv(
    records: list[PipelineRunRecord], metadata: dict[str, Any], include_timings: bool = True
) -> str:
    """CSV body preceded by one ``#`` line holding the metadata as JSON."""
    frame = pd.DataFrame([r.to_row(include_timings) for r in records])
    return _frame_to_csv(frame, metadata)


def _frame_to_csv(frame: pd.DataFrame, metadata: dict[str, Any]) -> str:
    buffer = io.StringIO()
    buffer.write("# " + json.dumps(metadata, sort_keys=True) + "\n")
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


def _write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def write_text(path: Path, text: str) -> Path:
    """Write ``text`` to ``path``, retrying transient OS errors."""
    attempts = get_pipeline_config().io_retry_attempts
    return io_retry(max_attempts=attempts)(_write_text)(path, text)


def emit_results(
    records: list[PipelineRunRecord],
    out_dir: str | Path,
    fmt: OutputFormat | str = OutputFormat.CSV,
    metadata: dict[str, Any] | None = None,
    summary: pd.DataFrame | None = None,
    include_timings: bool = True,
) -> list[Path]:
    """
    Write records, and the batch summary when given, under ``out_dir``.

    Raises:
        ValueError: No records
        IoFailure: Files could not be written after retries
    """
    if not records:
        raise ValueError("emit_results needs at least one record")
    fmt = OutputFormat(fmt)
    metadata = metadata or {}
    out_dir = Path(out_dir)
    written: list[Path] = []

    if fmt is OutputFormat.JSON:
        text = records_to_json(records, metadata, include_timings)
    else:
        text = records_to_csv(records, metadata, include_timings)
    written.append(write_text(out_dir / f"{RECORDS_STEM}.{fmt.value}", text))

    if summary is not None:
        table = summary.copy()
        if not include_timings and "time_s_mean" in table:
            table["time_s_mean"] = None
        if fmt is OutputFormat.JSON:
            rows = table.astype(object).where(table.notna(), None).to_dict(orient="records")
            text = _dumps({"metadata": metadata, "summary": rows})
        else:
            text = _frame_to_csv(table, metadata)
        written.append(write_text(out_dir / f"{SUMMARY_STEM}.{fmt.value}", text))

    for path in written:
        logger.info("Wrote %s", path)
    return written
