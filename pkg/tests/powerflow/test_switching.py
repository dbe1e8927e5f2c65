"""Tests for reactive limit switching."""

from unittest.mock import MagicMock

import numpy as np
import pytest

from dcac_pipeline import metrics as metrics_module
from dcac_pipeline.exceptions import SwitchLimit
from dcac_pipeline.feasibility import check_violations
from dcac_pipeline.grid import ROLE_CODES, BusRole
from dcac_pipeline.metrics import PipelineMetrics
from dcac_pipeline.powerflow import (
    CLAMP_CODES,
    AcVariant,
    ClampState,
    SlackMode,
    SolverOptions,
    initial_bus_types,
    run_acpf,
    switching_round,
    voltage_setpoints,
)

from ..conftest import with_generator

SETPOINTS = np.array([0.723, 1.63, 0.85])


PQ, PV, REF = (ROLE_CODES[r] for r in (BusRole.PQ, BusRole.PV, BusRole.REF))
FREE, AT_QMAX, AT_QMIN = (
    CLAMP_CODES[c] for c in (ClampState.FREE, ClampState.AT_QMAX, ClampState.AT_QMIN)
)


@pytest.fixture
def tight_case9(case9):
    """9-bus case whose second unit must absorb at least 0.2 p.u."""
    return with_generator(case9, 1, q_max=-0.2, q_min=-3.0)


class TestBusTypes:
    """Test starting roles and voltage targets."""

    def test_case9_roles(self, case9):
        """Test case roles are kept when every PV bus has a unit."""
        types = initial_bus_types(case9)

        assert types.tolist() == [REF, PV, PV] + [PQ] * 6

    def test_orphan_pv_bus_demoted(self, case9):
        """Test a PV bus whose unit is offline is solved as PQ."""
        case = with_generator(case9, 2, in_service=False)

        assert initial_bus_types(case)[2] == PQ

    def test_state_roles_are_enums(self, case9):
        """Test solved states carry bus roles and clamp states, not raw codes."""
        state = run_acpf(case9, SETPOINTS, AcVariant.BASE)

        assert state.clamp == (ClampState.FREE,) * 3
        assert state.bus_types[:3] == (BusRole.REF, BusRole.PV, BusRole.PV)
        assert state.role_codes().tolist() == initial_bus_types(case9).tolist()
        assert state.clamp_codes().tolist() == [FREE] * 3

    def test_voltage_setpoints(self, case9):
        """Test generator buses carry unit setpoints and load buses none."""
        v_sp = voltage_setpoints(case9)

        assert v_sp[:3] == pytest.approx((1.04, 1.025, 1.025))
        assert np.all(np.isnan(v_sp[3:]))
        assert voltage_setpoints(case9, hold_nominal=True)[:3] == pytest.approx((1.0, 1.0, 1.0))


class TestSwitchingRound:
    """Test one round of limit decisions on a converged state."""

    def test_eps_q_deadband(self, case9):
        """Test small reactive excesses do not clamp."""
        options = SolverOptions()
        base = run_acpf(case9, SETPOINTS, AcVariant.BASE)
        q = base.q_g[1]

        inside = with_generator(case9, 1, q_max=q - options.eps_q / 2, q_min=-3.0)
        _, _, n_switched = switching_round(inside, base, options)
        assert n_switched == 0

        outside = with_generator(case9, 1, q_max=q - 2 * options.eps_q, q_min=-3.0)
        types, clamp, n_switched = switching_round(outside, base, options)
        assert n_switched == 1
        assert clamp[1] == AT_QMAX
        assert types[1] == PQ

    def test_lower_limit(self, case9):
        """Test a unit forced to produce is clamped at its minimum."""
        base = run_acpf(case9, SETPOINTS, AcVariant.BASE)
        case = with_generator(case9, 2, q_min=0.1, q_max=3.0)

        _, clamp, n_switched = switching_round(case, base, SolverOptions())

        assert n_switched == 1
        assert clamp[2] == AT_QMIN

    def test_eps_v_release(self, tight_case9):
        """Test a clamped bus returns to voltage control only past eps_v."""
        options = SolverOptions()
        state = run_acpf(tight_case9, SETPOINTS, AcVariant.BTS, options)
        v_sp = voltage_setpoints(tight_case9)[1]

        def with_vm(value: float):
            vm = list(state.vm)
            vm[1] = value
            return state.model_copy(update={"vm": tuple(vm)})

        _, clamp, n_switched = switching_round(tight_case9, with_vm(v_sp + options.eps_v), options)
        assert n_switched == 0
        assert clamp[1] == AT_QMAX

        types, clamp, n_switched = switching_round(
            tight_case9, with_vm(v_sp + 2 * options.eps_v), options
        )
        assert n_switched == 1
        assert clamp[1] == FREE
        assert types[1] == PV


class TestSwitchingVariants:
    """Test the switching power flow variants."""

    def test_base_reports_reactive_violation(self, tight_case9):
        """Test the plain solve leaves the unit beyond its limit."""
        state = run_acpf(tight_case9, SETPOINTS, AcVariant.BASE)
        report = check_violations(tight_case9, state)

        assert state.q_g[1] > -0.2
        assert report.reactive.count == 1
        assert report.reactive.details[0].element == "gen 2 (bus 2)"

    def test_bts_enforces_limit(self, tight_case9):
        """Test switching clamps the unit and lets its voltage drop."""
        options = SolverOptions()
        state = run_acpf(tight_case9, SETPOINTS, AcVariant.BTS, options)

        assert state.converged
        assert state.clamp[1] is ClampState.AT_QMAX
        assert state.bus_types[1] is BusRole.PQ
        assert state.q_g[1] == pytest.approx(-0.2)
        assert state.vm[1] < 1.025
        assert state.outer_iters >= 1
        assert state.switch_count >= 1
        q_max = tight_case9.arrays.qmax
        assert np.all(np.asarray(state.q_g) <= q_max + options.eps_q)
        report = check_violations(tight_case9, state, reactive_deadband=options.eps_q)
        assert report.reactive.count == 0

    def test_spf_combines_slack_and_limits(self, tight_case9):
        """Test distributed slack and switching together."""
        options = SolverOptions()
        state = run_acpf(tight_case9, SETPOINTS, AcVariant.SPF, options)

        assert state.converged
        assert state.allocation.mode is SlackMode.HEADROOM
        assert state.clamp[1] is ClampState.AT_QMAX
        assert sum(state.allocation.pi_g) == pytest.approx(1.0)
        assert np.all(np.asarray(state.q_g) <= tight_case9.arrays.qmax + options.eps_q)

    def test_no_switching_without_limits(self, case9):
        """Test loose limits leave the solve identical to the base variant."""
        base = run_acpf(case9, SETPOINTS, AcVariant.BASE)
        bts = run_acpf(case9, SETPOINTS, AcVariant.BTS)

        assert bts.outer_iters == 0
        assert bts.switch_count == 0
        assert bts.vm == pytest.approx(base.vm)

    def test_switch_limit(self, case9, monkeypatch):
        """Test switching that never settles raises SwitchLimit."""

        def always_switch(case, state, options):
            return state.role_codes(), state.clamp_codes(), 1

        monkeypatch.setattr("dcac_pipeline.powerflow.solve.switching_round", always_switch)
        with pytest.raises(SwitchLimit) as exc_info:
            run_acpf(case9, SETPOINTS, AcVariant.BTS, SolverOptions(max_outer=2))

        assert exc_info.value.state is not None
        assert exc_info.value.state.outer_iters == 2

    def test_switching_metrics(self, tight_case9):
        """Test switching activity is reported."""
        statsd = MagicMock()
        metrics_module._metrics_client = PipelineMetrics(statsd_client=statsd)

        run_acpf(tight_case9, SETPOINTS, AcVariant.BTS)

        names = [c.args[0] for c in statsd.histogram.call_args_list]
        assert "pipeline.switching.rounds" in names
        assert "pipeline.solver.iterations" in names
