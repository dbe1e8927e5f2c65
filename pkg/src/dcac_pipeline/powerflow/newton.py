"""Polar Newton-Raphson power flow with optional distributed slack."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..exceptions import Diverged, SingularJacobian
from ..grid.matrices import build_admittance, generator_incidence
from ..grid.model import PQ_CODE, NetworkCase
from .models import FREE_CODE, PowerFlowState, SlackMode
from .slack import participation_factors

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BusLayout:
    """Which buses contribute equations and unknowns."""

    p_rows: np.ndarray
    q_rows: np.ndarray
    va_cols: np.ndarray
    vm_cols: np.ndarray
    distributed: bool

    @property
    def n_rows(self) -> int:
        return self.p_rows.size + self.q_rows.size

    @property
    def n_cols(self) -> int:
        return self.va_cols.size + self.vm_cols.size + int(self.distributed)


def bus_layout(
    case: NetworkCase,
    bus_types: np.ndarray,
    clamp: np.ndarray,
    distributed: bool,
) -> BusLayout:
    """
    Equation and unknown index sets for the current bus types.

    Angles are unknown everywhere but the reference bus. Magnitudes are
    unknown at PQ buses and at a reference bus whose generators are clamped.
    Active balance is enforced at every bus under distributed slack,
    otherwise everywhere but the reference bus. Bus types and clamp states
    are the integer codes of ``ROLE_CODES`` and ``CLAMP_CODES``.
    """
    arr = case.arrays
    n = arr.n_bus
    buses = np.arange(n)
    ref_gens = arr.gen_on & (arr.gen_bus == arr.ref)
    ref_clamped = bool(np.any(np.asarray(clamp)[ref_gens] != FREE_CODE))

    v_free = np.asarray(bus_types) == PQ_CODE
    if ref_clamped:
        v_free[arr.ref] = True

    non_ref = buses[buses != arr.ref]
    return BusLayout(
        p_rows=buses if distributed else non_ref,
        q_rows=buses[v_free],
        va_cols=non_ref,
        vm_cols=buses[v_free],
        distributed=distributed,
    )


def _power_mismatch(ybus: sp.csr_matrix, v: np.ndarray, s_spec: np.ndarray) -> np.ndarray:
    """Specified minus computed complex injection at every bus."""
    return s_spec - v * np.conj(ybus @ v)


def _stack(mis: np.ndarray, layout: BusLayout) -> np.ndarray:
    return np.r_[mis.real[layout.p_rows], mis.imag[layout.q_rows]]


def _jacobian(
    ybus: sp.csr_matrix, v: np.ndarray, layout: BusLayout, slack_column: np.ndarray | None
) -> sp.csc_matrix:
    """Derivative of computed injections with respect to the unknowns."""
    n = v.size
    ibus = ybus @ v
    diag_v = sp.diags(v)
    diag_i = sp.diags(ibus)
    diag_vnorm = sp.diags(v / np.abs(v))

    ds_dvm = diag_v @ (ybus @ diag_vnorm).conj() + diag_i.conj() @ diag_vnorm
    ds_dva = 1j * diag_v @ (diag_i - ybus @ diag_v).conj()

    full = sp.bmat(
        [[ds_dva.real, ds_dvm.real], [ds_dva.imag, ds_dvm.imag]], format="csr"
    )
    rows = np.r_[layout.p_rows, n + layout.q_rows]
    cols = np.r_[layout.va_cols, n + layout.vm_cols]
    jac = full[rows][:, cols]
    if layout.distributed:
        # the slack raises specified generation, so computed-minus-specified falls
        ell = np.zeros(rows.size)
        ell[: layout.p_rows.size] = -slack_column[layout.p_rows]
        jac = sp.hstack([jac, sp.csr_matrix(ell.reshape(-1, 1))], format="csr")
    return jac.tocsc()


def _state_arrays(state: PowerFlowState) -> tuple[np.ndarray, np.ndarray]:
    return state.role_codes(), state.clamp_codes()


def _specified_injection(case: NetworkCase, p_g: np.ndarray, q_g: np.ndarray) -> np.ndarray:
    arr = case.arrays
    cg = generator_incidence(case)
    return cg @ (p_g + 1j * q_g) - (arr.pd + 1j * arr.qd)


def compute_mismatch(case: NetworkCase, state: PowerFlowState) -> np.ndarray:
    """
    Active and reactive residuals of a state, specified minus computed.

    Active rows come first, over every bus under distributed slack and every
    non-reference bus otherwise, followed by reactive rows at buses without
    voltage control.
    """
    bus_types, clamp = _state_arrays(state)
    distributed = state.allocation.mode is not SlackMode.SINGLE_SLACK
    layout = bus_layout(case, bus_types, clamp, distributed)
    ybus = build_admittance(case).ybus
    s_spec = _specified_injection(case, np.asarray(state.p_g), np.asarray(state.q_g))
    return _stack(_power_mismatch(ybus, state.voltage, s_spec), layout)


def build_jacobian(case: NetworkCase, state: PowerFlowState) -> sp.csc_matrix:
    """Power flow Jacobian at a state, with the slack column under distributed slack."""
    bus_types, clamp = _state_arrays(state)
    distributed = state.allocation.mode is not SlackMode.SINGLE_SLACK
    layout = bus_layout(case, bus_types, clamp, distributed)
    ybus = build_admittance(case).ybus
    column = generator_incidence(case) @ state.allocation.pi if distributed else None
    return _jacobian(ybus, state.voltage, layout, column)


@dataclass
class NewtonIterate:
    """Mutable iterate of one Newton solve."""

    vm: np.ndarray
    va: np.ndarray
    p_sp: np.ndarray
    q_g: np.ndarray
    pi: np.ndarray
    ell: float = 0.0
    iterations: int = 0
    mismatch: float = float("inf")
    history: list[float] = field(default_factory=list)

    @property
    def p_g(self) -> np.ndarray:
        return self.p_sp + self.pi * self.ell


class NewtonSolver:
    """Newton-Raphson on a fixed bus layout."""

    def __init__(self, case: NetworkCase, layout: BusLayout, update_participation: bool = False):
        self.case = case
        self.layout = layout
        self.update_participation = update_participation
        self.ybus = build_admittance(case).ybus
        self.cg = generator_incidence(case)

    def _mismatch(self, it: NewtonIterate) -> np.ndarray:
        arr = self.case.arrays
        p_g = it.p_g if self.layout.distributed else it.p_sp
        s_spec = self.cg @ (p_g + 1j * it.q_g) - (arr.pd + 1j * arr.qd)
        v = it.vm * np.exp(1j * it.va)
        return _stack(_power_mismatch(self.ybus, v, s_spec), self.layout)

    def solve(self, it: NewtonIterate, tol: float, max_inner: int) -> NewtonIterate:
        """
        Iterate until the largest residual is within ``tol``.

        Raises:
            SingularJacobian: Factorization failed or produced non-finite steps
            Diverged: ``max_inner`` steps without convergence
        """
        layout = self.layout
        arr = self.case.arrays
        n_va, n_vm = layout.va_cols.size, layout.vm_cols.size

        for step in range(max_inner + 1):
            if self.update_participation and layout.distributed:
                it.pi, _ = participation_factors(arr.pmax, arr.gen_on, it.p_g)

            residual = self._mismatch(it)
            if not np.all(np.isfinite(residual)):
                raise Diverged(
                    f"Non-finite mismatch after {it.iterations} iterations",
                    operation="newton",
                )
            it.mismatch = float(np.max(np.abs(residual))) if residual.size else 0.0
            it.history.append(it.mismatch)
            logger.debug("Newton iteration %d: max mismatch %.3e", it.iterations, it.mismatch)
            if it.mismatch <= tol:
                return it
            if step == max_inner:
                break

            v = it.vm * np.exp(1j * it.va)
            column = self.cg @ it.pi if layout.distributed else None
            jac = _jacobian(self.ybus, v, layout, column)
            try:
                dx = splu(jac).solve(residual)
            except RuntimeError as e:
                raise SingularJacobian(
                    f"Jacobian factorization failed at iteration {it.iterations}",
                    operation="newton",
                    original_error=e,
                ) from e
            if not np.all(np.isfinite(dx)):
                raise SingularJacobian(
                    f"Non-finite Newton step at iteration {it.iterations}", operation="newton"
                )

            it.va[layout.va_cols] += dx[:n_va]
            it.vm[layout.vm_cols] += dx[n_va : n_va + n_vm]
            if layout.distributed:
                it.ell += float(dx[-1])
            it.iterations += 1

        raise Diverged(
            f"No convergence in {max_inner} Newton iterations, max mismatch {it.mismatch:.3e}",
            operation="newton",
        )
