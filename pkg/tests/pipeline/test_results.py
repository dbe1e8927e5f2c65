"""Tests for result files."""

import json

import pandas as pd
import pytest

from dcac_pipeline import __version__
from dcac_pipeline.dispatch import DcVariant
from dcac_pipeline.exceptions import IoFailure
from dcac_pipeline.pipeline import (
    OutputFormat,
    PipelineOptions,
    build_metadata,
    emit_results,
    records_from_json,
    records_to_csv,
    records_to_json,
    run_batch,
    run_pipeline,
)
from dcac_pipeline.pipeline import results as results_module
from dcac_pipeline.powerflow import AcVariant
from dcac_pipeline.scenarios import ScenarioConfig


@pytest.fixture
def metadata():
    return build_metadata(
        "case9", [DcVariant.BASE], [AcVariant.BTS], ScenarioConfig(seed=3), PipelineOptions()
    )


@pytest.fixture
def record(case9):
    return run_pipeline(case9, DcVariant.BASE, AcVariant.BTS)


class TestMetadata:
    """Test run metadata."""

    def test_contents(self, metadata):
        """Test seeds, tolerances and variants are recorded."""
        assert metadata["seed"] == 3
        assert metadata["dc_variants"] == ["DC_BASE"]
        assert metadata["ac_variants"] == ["AC_BTS"]
        assert metadata["version"] == __version__
        assert "PCG64" in metadata["rng"]
        assert metadata["eps_q"] == PipelineOptions().solver.eps_q


class TestJson:
    """Test the JSON document."""

    def test_round_trip_is_byte_stable(self, record, metadata):
        """Test parsing and re-emitting gives identical text."""
        text = records_to_json([record], metadata)
        parsed_metadata, records = records_from_json(text)

        assert records_to_json(records, parsed_metadata) == text
        assert records[0] == record

    def test_sorted_keys(self, record, metadata):
        """Test keys are sorted for diff-friendly output."""
        payload = json.loads(records_to_json([record], metadata))

        assert list(payload) == ["metadata", "records"]
        assert list(payload["records"][0]) == sorted(payload["records"][0])

    def test_timings_blanked(self, record, metadata):
        """Test wall times can be left out."""
        payload = json.loads(records_to_json([record], metadata, include_timings=False))

        assert payload["records"][0]["time_s"] is None


class TestCsv:
    """Test the CSV table."""

    def test_single_record(self, record, metadata):
        """Test a metadata line, a header and one row."""
        lines = records_to_csv([record], metadata).splitlines()

        assert len(lines) == 3
        assert lines[0].startswith("# ")
        assert json.loads(lines[0][2:]) == metadata
        assert lines[1].startswith("case,dc,ac,sample,converged,inner_iters,outer_iters,")
        assert lines[1].endswith(",mae,cd,time_s,failed_stage")
        assert lines[2].startswith("case9,DC_BASE,AC_BTS,0,True,")

    def test_readable_with_pandas(self, record, metadata):
        """Test the table parses back with the comment skipped."""
        from io import StringIO

        frame = pd.read_csv(StringIO(records_to_csv([record, record], metadata)), comment="#")

        assert len(frame) == 2
        assert frame["viol_q_count"].tolist() == [0, 0]


class TestEmitResults:
    """Test writing result files."""

    def test_csv_with_summary(self, case9, metadata, tmp_path):
        """Test records and summary files are written."""
        config = ScenarioConfig(sigma=0.02, n_samples=2)
        result = run_batch(case9, [DcVariant.BASE], [AcVariant.BTS], config)
        paths = emit_results(result.records, tmp_path / "out", "csv", metadata, result.summary)

        assert [p.name for p in paths] == ["records.csv", "summary.csv"]
        summary = pd.read_csv(paths[1], comment="#")
        assert summary["samples"].tolist() == [2]

    def test_json_without_timings(self, case9, metadata, tmp_path):
        """Test repeated runs write identical JSON when timings are off."""
        config = ScenarioConfig(sigma=0.02, n_samples=2, seed=8)
        texts = []
        for name in ("a", "b"):
            result = run_batch(case9, [DcVariant.BASE], [AcVariant.BTS], config)
            paths = emit_results(
                result.records,
                tmp_path / name,
                OutputFormat.JSON,
                metadata,
                result.summary,
                include_timings=False,
            )
            texts.append([p.read_text() for p in paths])

        assert texts[0] == texts[1]
        summary = json.loads(texts[0][1])
        assert summary["summary"][0]["time_s_mean"] is None

    def test_empty_records(self, tmp_path):
        """Test an empty result set is rejected."""
        with pytest.raises(ValueError):
            emit_results([], tmp_path)

    def test_write_retried(self, record, metadata, tmp_path, monkeypatch):
        """Test a transient write error is retried."""
        calls = []
        original = results_module._write_text

        def flaky(path, text):
            calls.append(path)
            if len(calls) == 1:
                raise OSError("Resource temporarily unavailable")
            return original(path, text)

        monkeypatch.setattr(results_module, "_write_text", flaky)
        paths = emit_results([record], tmp_path, "csv", metadata)

        assert len(calls) == 2
        assert paths[0].exists()

    def test_write_failure(self, record, metadata, tmp_path, monkeypatch):
        """Test persistent write errors become IoFailure."""

        def failing(path, text):
            raise OSError("No space left on device")

        monkeypatch.setattr(results_module, "_write_text", failing)
        with pytest.raises(IoFailure):
            emit_results([record], tmp_path, "csv", metadata)
