"""Tests for limit violation checks."""

import numpy as np
import pytest

from dcac_pipeline.exceptions import NotConverged
from dcac_pipeline.feasibility import ViolationCategory, ViolationReport, check_violations
from dcac_pipeline.grid import parse_matpower_case
from dcac_pipeline.grid.matrices import branch_flows
from dcac_pipeline.powerflow import AcVariant, run_acpf

from ..conftest import TWO_BUS, with_generator

SETPOINTS = np.array([0.723, 1.63, 0.85])


def _with_vm(state, bus: int, value: float):
    vm = list(state.vm)
    vm[bus] = value
    return state.model_copy(update={"vm": tuple(vm)})


class TestCheckViolations:
    """Test each violation category."""

    def test_case9_operating_point_is_feasible(self, case9):
        """Test the case dispatch respects every limit."""
        state = run_acpf(case9, SETPOINTS, AcVariant.BASE)
        report = check_violations(case9, state)

        assert report.is_feasible
        assert report.total_count == 0

    def test_active_limit(self):
        """Test the slack unit pushed past its maximum."""
        case = parse_matpower_case(TWO_BUS.replace("1 200 0;", "1 40 0;"))
        state = run_acpf(case, np.array([0.4]), AcVariant.BASE)
        report = check_violations(case, state)

        assert report.active.count == 1
        assert report.active.max_violation == pytest.approx(state.p_g[0] - 0.4)
        assert report.active.details[0].element == "gen 1 (bus 1)"

    def test_voltage_limit(self, case9):
        """Test bus voltages outside their band are reported per bus."""
        state = _with_vm(run_acpf(case9, SETPOINTS, AcVariant.BASE), 4, 1.15)
        report = check_violations(case9, state)

        assert report.voltage.count == 1
        assert report.voltage.details[0].element == "bus 5"
        assert report.voltage.max_violation == pytest.approx(0.05)

    def test_threshold_filters_small_excess(self, case9):
        """Test excesses at or below the threshold are ignored."""
        state = _with_vm(run_acpf(case9, SETPOINTS, AcVariant.BASE), 4, 1.1 + 1e-5)

        assert check_violations(case9, state, threshold=1e-4).voltage.count == 0
        assert check_violations(case9, state, threshold=1e-6).voltage.count == 1

    def test_reactive_deadband(self, case9):
        """Test the deadband hides small excesses but not the recorded magnitude."""
        case = with_generator(case9, 1, q_max=-0.2, q_min=-3.0)
        state = run_acpf(case, SETPOINTS, AcVariant.BASE)
        excess = state.q_g[1] + 0.2

        assert check_violations(case, state, reactive_deadband=excess + 0.01).reactive.count == 0
        report = check_violations(case, state, reactive_deadband=excess / 2)
        assert report.reactive.count == 1
        assert report.reactive.sum_violation == pytest.approx(excess)

    def test_thermal_limit(self):
        """Test overloads are reported in percent of the rating."""
        case = parse_matpower_case(TWO_BUS.replace("0.01 0.1 0 0 0 0", "0.01 0.1 0 50 50 50"))
        state = run_acpf(case, np.array([0.5]), AcVariant.BASE)
        flows = branch_flows(case, np.asarray(state.vm), np.asarray(state.va))
        s_max = max(abs(flows.s_from[0]), abs(flows.s_to[0]))

        report = check_violations(case, state)

        assert report.thermal.count == 1
        assert report.thermal.details[0].element == "branch 1 (1-2)"
        assert report.thermal.max_violation == pytest.approx((s_max - 0.5) / 0.5 * 100)

    def test_unrated_branch_skipped(self, two_bus):
        """Test a zero rating means no thermal limit."""
        state = run_acpf(two_bus, np.array([0.5]), AcVariant.BASE)

        assert check_violations(two_bus, state).thermal.count == 0

    def test_requires_converged_state(self, case9):
        """Test non-converged states are rejected."""
        state = run_acpf(case9, SETPOINTS, AcVariant.BASE).model_copy(update={"converged": False})

        with pytest.raises(NotConverged):
            check_violations(case9, state)


class TestViolationReport:
    """Test report aggregation and flattening."""

    def test_flat_columns(self):
        """Test one count, max and sum column per category."""
        flat = ViolationReport().flat()

        assert len(flat) == 12
        assert flat["viol_th_count"] == 0
        assert flat["viol_q_sum"] == 0.0

    def test_aggregates(self, case9):
        """Test count, max and sum agree with details."""
        state = _with_vm(_with_vm(run_acpf(case9, SETPOINTS, AcVariant.BASE), 4, 1.15), 6, 0.8)
        voltage = check_violations(case9, state).category(ViolationCategory.VOLTAGE)

        assert voltage.count == 2
        assert voltage.max_violation == pytest.approx(0.1)
        assert voltage.sum_violation == pytest.approx(0.15)

    def test_to_rows(self):
        """Test the long format lists every category."""
        rows = ViolationReport().to_rows("DC_BASE", "AC_BTS")

        assert [r["category"] for r in rows] == ["active", "reactive", "voltage", "thermal"]
        assert all(r["dc_variant"] == "DC_BASE" for r in rows)
