"""AC power flow driver: Newton solves wrapped in reactive limit switching."""

from __future__ import annotations

import logging

import numpy as np

from ..exceptions import DimensionMismatch, NoGenerators, PowerFlowError, SwitchLimit
from ..grid.matrices import branch_flows, build_admittance, check_connectivity
from ..grid.model import NetworkCase
from ..metrics import get_pipeline_metrics
from .models import (
    AT_QMAX_CODE,
    AT_QMIN_CODE,
    FREE_CODE,
    AcVariant,
    ParticipationUpdate,
    PowerFlowState,
    SlackAllocation,
    SlackMode,
    SolverOptions,
    WarmStart,
    clamps_from_codes,
    roles_from_codes,
)
from .newton import BusLayout, NewtonIterate, NewtonSolver, bus_layout
from .slack import participation_factors, single_slack_allocation
from .switching import bus_sum, initial_bus_types, switching_round, voltage_setpoints

logger = logging.getLogger(__name__)


def _slack_generator(case: NetworkCase) -> int:
    arr = case.arrays
    at_ref = np.flatnonzero(arr.gen_on & (arr.gen_bus == arr.ref))
    if at_ref.size == 0:
        raise NoGenerators(
            f"Reference bus {case.ref_bus} has no in-service generator", operation="run_acpf"
        )
    return int(at_ref[0])


def _split_reactive(total: float, q_min: np.ndarray, q_max: np.ndarray) -> np.ndarray:
    """Share a bus reactive output among its generators in proportion to their ranges."""
    spans = q_max - q_min
    if np.all(np.isfinite(spans)) and spans.sum() > 0:
        return q_min + (total - q_min.sum()) * spans / spans.sum()
    return np.full(q_min.size, total / q_min.size)


def _fixed_reactive(case: NetworkCase, clamp: np.ndarray) -> np.ndarray:
    arr = case.arrays
    q = np.where(arr.gen_on, arr.qg, 0.0)
    q = np.where(clamp == AT_QMAX_CODE, arr.qmax, q)
    return np.where(clamp == AT_QMIN_CODE, arr.qmin, q)


def _initial_voltage(
    case: NetworkCase, options: SolverOptions, v_sp: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    n = case.arrays.n_bus
    if options.warm_start is WarmStart.FROM_STATE:
        start = options.initial_state
        if len(start.vm) != n:
            raise DimensionMismatch("initial_state.vm", n, len(start.vm), stage="ac")
        vm, va = np.array(start.vm, dtype=float), np.array(start.va, dtype=float)
    else:
        vm, va = np.ones(n), np.zeros(n)
    controlled = ~np.isnan(v_sp)
    vm[controlled] = v_sp[controlled]
    return vm, va


def _build_state(
    case: NetworkCase,
    it: NewtonIterate,
    layout: BusLayout,
    bus_types: np.ndarray,
    clamp: np.ndarray,
    mode: SlackMode,
    slack_gen: int | None,
    *,
    converged: bool,
    outer: int,
    switches: int,
) -> PowerFlowState:
    """Recover generator outputs from the network solution."""
    arr = case.arrays
    v = it.vm * np.exp(1j * it.va)
    ybus = build_admittance(case).ybus
    s_gen = v * np.conj(ybus @ v) + (arr.pd + 1j * arr.qd)

    q_g = it.q_g.copy()
    enforced = np.zeros(arr.n_bus, dtype=bool)
    enforced[layout.q_rows] = True
    for b in np.unique(arr.gen_bus[arr.gen_on]):
        if enforced[b]:
            continue
        gens = np.flatnonzero(arr.gen_on & (arr.gen_bus == b))
        q_g[gens] = _split_reactive(float(s_gen.imag[b]), arr.qmin[gens], arr.qmax[gens])

    if slack_gen is None:
        p_g = np.where(arr.gen_on, it.p_g, 0.0)
        allocation = SlackAllocation(
            pi_g=tuple(it.pi), ell_tot=float(it.ell), mode=mode, p_g=tuple(p_g)
        )
    else:
        others = arr.gen_on & (arr.gen_bus == arr.ref)
        others[slack_gen] = False
        p_slack = float(s_gen.real[arr.ref]) - float(it.p_sp[others].sum())
        allocation = single_slack_allocation(arr.n_gen, slack_gen, it.p_sp, p_slack)
        p_g = np.asarray(allocation.p_g)

    return PowerFlowState(
        vm=tuple(it.vm),
        va=tuple(it.va),
        p_g=tuple(p_g),
        q_g=tuple(q_g),
        bus_types=roles_from_codes(bus_types),
        clamp=clamps_from_codes(clamp),
        converged=converged,
        inner_iters=it.iterations,
        outer_iters=outer,
        switch_count=switches,
        mismatch=it.mismatch,
        allocation=allocation,
    )


def run_acpf(
    case: NetworkCase,
    setpoints: np.ndarray,
    variant: AcVariant = AcVariant.BASE,
    options: SolverOptions | None = None,
) -> PowerFlowState:
    """
    Solve the AC power flow for fixed generator active setpoints.

    The base and switching variants let the first generator at the reference
    bus absorb the active mismatch. The distributed variants share it among
    all in-service generators by headroom. The switching variants enforce
    generator reactive limits between Newton solves.

    Args:
        case: Network case
        setpoints: Per-unit active setpoints, one per generator
        variant: AC variant
        options: Solver settings, defaults from PipelineConfig

    Returns:
        Converged PowerFlowState

    Raises:
        Diverged: Newton iterations exhausted
        SingularJacobian: Jacobian factorization failed
        SwitchLimit: Switching rounds exhausted with switches pending
        NoGenerators: No generator can take the slack
    """
    options = options or SolverOptions()
    arr = case.arrays
    setpoints = np.asarray(setpoints, dtype=float)
    if setpoints.shape != (arr.n_gen,):
        raise DimensionMismatch("setpoints", arr.n_gen, setpoints.shape, stage="ac")
    check_connectivity(case)
    metrics = get_pipeline_metrics()

    distributed = variant.distributed_slack
    p_sp = np.where(arr.gen_on, setpoints, 0.0)
    bus_types = initial_bus_types(case)
    clamp = np.full(arr.n_gen, FREE_CODE, dtype=int)
    v_sp = voltage_setpoints(case, options.hold_nominal_voltage)

    if distributed:
        slack_gen = None
        pi, mode = participation_factors(arr.pmax, arr.gen_on, p_sp)
    else:
        slack_gen = _slack_generator(case)
        pi = np.zeros(arr.n_gen)
        pi[slack_gen] = 1.0
        mode = SlackMode.SINGLE_SLACK

    vm, va = _initial_voltage(case, options, v_sp)
    it = NewtonIterate(vm=vm, va=va, p_sp=p_sp, q_g=_fixed_reactive(case, clamp), pi=pi)
    start = options.initial_state
    if (
        distributed
        and options.warm_start is WarmStart.FROM_STATE
        and start.allocation.mode is not SlackMode.SINGLE_SLACK
    ):
        it.ell = start.allocation.ell_tot

    inner_update = options.participation_update is ParticipationUpdate.INNER
    outer = switches = 0
    while True:
        layout = bus_layout(case, bus_types, clamp, distributed)
        controlled = np.setdiff1d(np.flatnonzero(~np.isnan(v_sp)), layout.vm_cols)
        it.vm[controlled] = v_sp[controlled]
        if distributed and not inner_update:
            it.pi, mode = participation_factors(arr.pmax, arr.gen_on, p_sp)

        solver = NewtonSolver(case, layout, update_participation=inner_update)
        try:
            solver.solve(it, options.tol, options.max_inner)
        except PowerFlowError as e:
            e.state = _build_state(
                case, it, layout, bus_types, clamp, mode, slack_gen,
                converged=False, outer=outer, switches=switches,
            )
            metrics.record_solver("newton", it.iterations, type(e).__name__)
            logger.warning("%s failed for %s: %s", variant.label, case.name, e.args[0])
            raise

        state = _build_state(
            case, it, layout, bus_types, clamp, mode, slack_gen,
            converged=True, outer=outer, switches=switches,
        )
        if not variant.switching:
            break

        new_types, new_clamp, n_switched = switching_round(case, state, options)
        if n_switched == 0:
            break
        if outer >= options.max_outer:
            metrics.record_solver("newton", it.iterations, "SwitchLimit")
            raise SwitchLimit(
                f"{n_switched} switches pending after {outer} rounds",
                state=state,
                operation="run_acpf",
            )
        outer += 1
        switches += n_switched
        bus_types, clamp = new_types, new_clamp
        it.q_g = _fixed_reactive(case, clamp)

    metrics.record_solver("newton", it.iterations, "converged")
    if variant.switching:
        metrics.record_switches(variant.label, outer, switches)
    logger.info(
        "%s converged for %s: %d Newton iterations, %d switching rounds, slack %s %.6f p.u.",
        variant.label,
        case.name,
        it.iterations,
        outer,
        state.allocation.mode.value,
        state.allocation.ell_tot,
    )
    return state


def network_losses(case: NetworkCase, state: PowerFlowState) -> float:
    """Active losses in branches and bus shunts, per unit."""
    arr = case.arrays
    vm, va = np.asarray(state.vm), np.asarray(state.va)
    flows = branch_flows(case, vm, va)
    return float(flows.losses.real.sum() + np.sum(arr.gs * vm**2))


def reactive_by_bus(case: NetworkCase, state: PowerFlowState) -> np.ndarray:
    """Total generator reactive output at each bus."""
    return bus_sum(case, state.q_g)

