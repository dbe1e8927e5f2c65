"""Reactive limit enforcement by PV/PQ bus type switching."""

from __future__ import annotations

import logging

import numpy as np

from ..grid.model import PQ_CODE, PV_CODE, NetworkCase
from .models import (
    AT_QMAX_CODE,
    AT_QMIN_CODE,
    CLAMPS_BY_CODE,
    FREE_CODE,
    PowerFlowState,
    SolverOptions,
)

logger = logging.getLogger(__name__)


def bus_sum(case: NetworkCase, values: np.ndarray) -> np.ndarray:
    """Sum per-generator values onto buses over in-service units."""
    arr = case.arrays
    out = np.zeros(arr.n_bus)
    np.add.at(out, arr.gen_bus[arr.gen_on], np.asarray(values, dtype=float)[arr.gen_on])
    return out


def has_generator(case: NetworkCase) -> np.ndarray:
    arr = case.arrays
    mask = np.zeros(arr.n_bus, dtype=bool)
    mask[arr.gen_bus[arr.gen_on]] = True
    return mask


def initial_bus_types(case: NetworkCase) -> np.ndarray:
    """Case role codes, with PV buses lacking an in-service generator demoted to PQ."""
    types = case.arrays.bus_type.copy()
    types[(types == PV_CODE) & ~has_generator(case)] = PQ_CODE
    return types


def voltage_setpoints(case: NetworkCase, hold_nominal: bool = False) -> np.ndarray:
    """
    Magnitude setpoint of each voltage-controlled bus, NaN elsewhere.

    The first in-service generator at a bus sets its voltage. A reference
    bus without generators keeps its case voltage.
    """
    arr = case.arrays
    v_sp = np.full(arr.n_bus, np.nan)
    for g in np.flatnonzero(arr.gen_on)[::-1]:
        v_sp[arr.gen_bus[g]] = arr.vg[g]
    if np.isnan(v_sp[arr.ref]):
        v_sp[arr.ref] = arr.vm0[arr.ref]
    if hold_nominal:
        v_sp[~np.isnan(v_sp)] = 1.0
    return v_sp


def switching_round(
    case: NetworkCase,
    state: PowerFlowState,
    options: SolverOptions,
) -> tuple[np.ndarray, np.ndarray, int]:
    """
    Evaluate reactive limits at every generator bus of a converged state.

    A voltage-controlled bus whose generators need more than their combined
    limit plus ``eps_q`` is clamped at that limit. A clamped bus returns to
    voltage control only once its voltage has moved past the setpoint by more
    than ``eps_v`` in the relieving direction.

    Returns:
        New bus type codes, new per-generator clamp codes and the number of
        buses that switched
    """
    arr = case.arrays
    types = state.role_codes()
    clamp = state.clamp_codes()
    vm = np.asarray(state.vm)
    v_sp = voltage_setpoints(case, options.hold_nominal_voltage)
    roles = arr.bus_type

    q_bus = bus_sum(case, state.q_g)
    q_max = bus_sum(case, arr.qmax)
    q_min = bus_sum(case, arr.qmin)

    switched = 0
    for b in np.flatnonzero(has_generator(case) & (roles != PQ_CODE)):
        gens = np.flatnonzero(arr.gen_on & (arr.gen_bus == b))
        current = int(clamp[gens[0]])
        new = current
        if current == FREE_CODE:
            if q_bus[b] > q_max[b] + options.eps_q:
                new = AT_QMAX_CODE
            elif q_bus[b] < q_min[b] - options.eps_q:
                new = AT_QMIN_CODE
        elif current == AT_QMAX_CODE and vm[b] > v_sp[b] + options.eps_v:
            new = FREE_CODE
        elif current == AT_QMIN_CODE and vm[b] < v_sp[b] - options.eps_v:
            new = FREE_CODE

        if new == current:
            continue
        switched += 1
        clamp[gens] = new
        if roles[b] == PV_CODE:
            types[b] = PV_CODE if new == FREE_CODE else PQ_CODE
        logger.debug(
            "Bus %d: %s -> %s (Q %.4f, limits [%.4f, %.4f], V %.4f)",
            int(arr.bus_ids[b]),
            CLAMPS_BY_CODE[current].value,
            CLAMPS_BY_CODE[new].value,
            q_bus[b],
            q_min[b],
            q_max[b],
            vm[b],
        )

    return types, clamp, switched
