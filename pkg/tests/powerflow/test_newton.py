"""Tests for the Newton-Raphson power flow."""

import numpy as np
import pytest

from dcac_pipeline.exceptions import (
    DimensionMismatch,
    Diverged,
    NoGenerators,
    SingularJacobian,
)
from dcac_pipeline.grid import parse_matpower_case
from dcac_pipeline.powerflow import (
    AcVariant,
    BusLayout,
    CLAMP_CODES,
    ClampState,
    NewtonSolver,
    ParticipationUpdate,
    SlackMode,
    SolverOptions,
    WarmStart,
    build_jacobian,
    bus_layout,
    compute_mismatch,
    initial_bus_types,
    network_losses,
    run_acpf,
)
from dcac_pipeline.powerflow.newton import NewtonIterate

from ..conftest import TWO_BUS

CASE9_SETPOINTS = np.array([0.723, 1.63, 0.85])


def _fixed_point_v2(z: complex, s_load: complex) -> complex:
    """Receiving-end voltage from V2 = 1 - z * conj(S / V2)."""
    v2 = 1.0 + 0j
    for _ in range(500):
        v2 = 1.0 - z * np.conj(s_load / v2)
    return v2


class TestRunAcpfBase:
    """Test single-slack solves."""

    def test_two_bus_matches_fixed_point(self, two_bus):
        """Test voltage magnitude and angle against the scalar iteration."""
        state = run_acpf(two_bus, np.array([0.5]), AcVariant.BASE, SolverOptions(tol=1e-12))
        v2 = _fixed_point_v2(0.01 + 0.1j, 0.5 + 0.2j)

        assert state.converged
        assert state.vm[1] == pytest.approx(abs(v2), abs=1e-8)
        assert state.va[1] == pytest.approx(np.angle(v2), abs=1e-8)
        assert state.vm[0] == 1.0
        assert state.va[0] == 0.0

    def test_slack_covers_losses(self, two_bus):
        """Test the slack unit supplies load plus series losses."""
        state = run_acpf(two_bus, np.array([0.5]), AcVariant.BASE)
        losses = network_losses(two_bus, state)

        assert losses > 0
        assert state.p_g[0] == pytest.approx(0.5 + losses, abs=1e-5)
        assert state.allocation.mode is SlackMode.SINGLE_SLACK
        assert state.allocation.ell_tot == pytest.approx(losses, abs=1e-5)

    def test_quadratic_convergence(self, two_bus):
        """Test residuals shrink quadratically near the solution."""
        types = initial_bus_types(two_bus)
        clamp = np.array([CLAMP_CODES[ClampState.FREE]])
        layout = bus_layout(two_bus, types, clamp, distributed=False)
        it = NewtonIterate(
            vm=np.ones(2), va=np.zeros(2), p_sp=np.array([0.5]), q_g=np.zeros(1), pi=np.array([1.0])
        )

        NewtonSolver(two_bus, layout).solve(it, tol=1e-13, max_inner=20)

        history = it.history
        close = [(prev, last) for prev, last in zip(history, history[1:]) if prev < 0.1]
        assert close
        for prev, last in close:
            assert last <= 50 * prev**2 + 1e-13

    def test_zero_load_flat_start(self):
        """Test a balanced flat profile needs no iterations."""
        text = TWO_BUS.replace("2 1 50 20", "2 1 0 0")
        case = parse_matpower_case(text)
        state = run_acpf(case, np.array([0.0]), AcVariant.BASE)

        assert state.converged
        assert state.inner_iters <= 1
        assert state.vm == pytest.approx((1.0, 1.0))

    @pytest.mark.parametrize("variant", list(AcVariant))
    def test_case9_power_balance(self, case9, variant):
        """Test generation equals load plus network losses."""
        state = run_acpf(case9, CASE9_SETPOINTS, variant)
        losses = network_losses(case9, state)

        assert state.converged
        assert sum(state.p_g) == pytest.approx(case9.arrays.pd.sum() + losses, abs=1e-5)

    def test_case9_known_solution(self, case9):
        """Test slack output and reactive outputs of the 9-bus case."""
        state = run_acpf(case9, CASE9_SETPOINTS, AcVariant.BASE)

        assert state.p_g[0] == pytest.approx(0.7164, abs=1e-3)
        assert state.p_g[1:] == pytest.approx((1.63, 0.85))
        assert state.q_g == pytest.approx((0.2705, 0.0665, -0.1086), abs=2e-3)
        assert state.vm[1] == pytest.approx(1.025)

    def test_warm_start_from_state(self, case9):
        """Test starting at a solution converges immediately."""
        first = run_acpf(case9, CASE9_SETPOINTS, AcVariant.BASE)
        options = SolverOptions(warm_start=WarmStart.FROM_STATE, initial_state=first)
        second = run_acpf(case9, CASE9_SETPOINTS, AcVariant.BASE, options)

        assert second.inner_iters <= 1
        assert second.vm == pytest.approx(first.vm, abs=1e-6)

    def test_warm_start_needs_state(self):
        """Test from_state without a state is rejected."""
        with pytest.raises(ValueError):
            SolverOptions(warm_start=WarmStart.FROM_STATE)


class TestDistributedSlack:
    """Test headroom-shared slack."""

    def test_single_unit_matches_base(self, two_bus):
        """Test one generator takes the whole mismatch either way."""
        base = run_acpf(two_bus, np.array([0.5]), AcVariant.BASE)
        ds = run_acpf(two_bus, np.array([0.5]), AcVariant.DS)

        assert ds.allocation.mode is SlackMode.HEADROOM
        assert ds.vm == pytest.approx(base.vm, abs=1e-8)
        assert ds.va == pytest.approx(base.va, abs=1e-8)
        assert ds.p_g == pytest.approx(base.p_g, abs=1e-8)

    def test_case9_shares_by_headroom(self, case9):
        """Test every unit moves by its share of the losses."""
        state = run_acpf(case9, CASE9_SETPOINTS, AcVariant.DS)
        alloc = state.allocation
        headroom = case9.arrays.pmax - CASE9_SETPOINTS

        assert alloc.pi == pytest.approx(headroom / headroom.sum())
        mismatch = case9.arrays.pd.sum() + network_losses(case9, state) - CASE9_SETPOINTS.sum()
        assert alloc.ell_tot == pytest.approx(mismatch, abs=1e-5)
        assert np.asarray(state.p_g) - CASE9_SETPOINTS == pytest.approx(alloc.pi * alloc.ell_tot)
        assert state.va[0] == 0.0

    def test_inner_participation_update(self, case9):
        """Test refreshing shares inside Newton still balances the network."""
        options = SolverOptions(participation_update=ParticipationUpdate.INNER)
        state = run_acpf(case9, CASE9_SETPOINTS, AcVariant.DS, options)
        losses = network_losses(case9, state)

        assert state.converged
        assert sum(state.p_g) == pytest.approx(case9.arrays.pd.sum() + losses, abs=1e-5)


class TestNewtonFailures:
    """Test error reporting."""

    def test_iteration_limit(self, case9):
        """Test Diverged carries the last iterate."""
        options = SolverOptions(max_inner=1, tol=1e-14)
        with pytest.raises(Diverged) as exc_info:
            run_acpf(case9, CASE9_SETPOINTS, AcVariant.BASE, options)

        state = exc_info.value.state
        assert state is not None
        assert state.converged is False
        assert state.inner_iters == 1
        assert exc_info.value.stage == "ac"

    def test_singular_jacobian(self, case9, monkeypatch):
        """Test a failed factorization."""

        def singular(matrix):
            raise RuntimeError("Factor is exactly singular")

        monkeypatch.setattr("dcac_pipeline.powerflow.newton.splu", singular)
        with pytest.raises(SingularJacobian):
            run_acpf(case9, CASE9_SETPOINTS, AcVariant.BASE)

    def test_no_slack_generator(self):
        """Test a reference bus without an in-service unit."""
        text = TWO_BUS.replace("1 50 0 999 -999 1.0 100 1", "1 50 0 999 -999 1.0 100 0")
        case = parse_matpower_case(text)

        with pytest.raises(NoGenerators):
            run_acpf(case, np.array([0.5]), AcVariant.BASE)
        with pytest.raises(NoGenerators):
            run_acpf(case, np.array([0.5]), AcVariant.DS)

    def test_setpoint_length(self, case9):
        """Test one setpoint per generator is required."""
        with pytest.raises(DimensionMismatch):
            run_acpf(case9, np.array([1.0, 1.0]), AcVariant.BASE)


class TestMismatchAndJacobian:
    """Test the public residual and Jacobian."""

    def test_mismatch_vanishes_at_solution(self, case9):
        """Test residuals of a converged state are within tolerance."""
        state = run_acpf(case9, CASE9_SETPOINTS, AcVariant.BASE)
        residual = compute_mismatch(case9, state)

        # 8 active rows and 6 reactive rows
        assert residual.shape == (14,)
        assert np.max(np.abs(residual)) <= 1e-6

    def test_distributed_layout_adds_slack_column(self, case9):
        """Test every bus balances active power under distributed slack."""
        state = run_acpf(case9, CASE9_SETPOINTS, AcVariant.DS)
        jac = build_jacobian(case9, state)

        assert compute_mismatch(case9, state).shape == (15,)
        assert jac.shape == (15, 15)

    def test_jacobian_matches_finite_difference(self, two_bus):
        """Test the angle column against central differences."""
        state = run_acpf(two_bus, np.array([0.5]), AcVariant.BASE)
        jac = build_jacobian(two_bus, state).toarray()
        h = 1e-6

        def mismatch_at(delta: float) -> np.ndarray:
            va = list(state.va)
            va[1] += delta
            return compute_mismatch(two_bus, state.model_copy(update={"va": tuple(va)}))

        derivative = (mismatch_at(h) - mismatch_at(-h)) / (2 * h)
        # residual is specified minus computed
        assert -derivative == pytest.approx(jac[:, 0], abs=1e-6)

    def test_layout_sizes(self, case9):
        """Test unknowns and equations agree."""
        types = initial_bus_types(case9)
        clamp = np.full(3, CLAMP_CODES[ClampState.FREE])
        for distributed in (False, True):
            layout: BusLayout = bus_layout(case9, types, clamp, distributed)
            assert layout.n_rows == layout.n_cols

    def test_layout_pq_buses_get_magnitude_unknowns(self, two_bus, case9):
        """Test load buses carry reactive rows and magnitude unknowns."""
        layout = bus_layout(
            two_bus, initial_bus_types(two_bus), np.array([CLAMP_CODES[ClampState.FREE]]), False
        )
        assert layout.q_rows.tolist() == [1]
        assert layout.vm_cols.tolist() == [1]
        assert layout.p_rows.tolist() == [1]

        free = np.full(3, CLAMP_CODES[ClampState.FREE])
        layout = bus_layout(case9, initial_bus_types(case9), free, False)
        assert layout.vm_cols.tolist() == list(range(3, 9))

    def test_layout_clamped_reference_frees_magnitude(self, case9):
        """Test a clamped reference unit turns the reference magnitude into an unknown."""
        clamp = np.full(3, CLAMP_CODES[ClampState.FREE])
        clamp[0] = CLAMP_CODES[ClampState.AT_QMAX]

        layout = bus_layout(case9, initial_bus_types(case9), clamp, False)

        assert 0 in layout.vm_cols.tolist()
        assert 0 in layout.q_rows.tolist()
        assert 0 not in layout.va_cols.tolist()
