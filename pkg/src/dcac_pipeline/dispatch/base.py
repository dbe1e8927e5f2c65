"""Lossless DC optimal power flow and helpers shared by the loss variants."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..exceptions import InfeasibleDispatch, SolverFailure
from ..grid.matrices import build_dc_matrices, check_connectivity, generator_incidence
from ..grid.model import NetworkCase
from ..solver import QpProblem, QpSolution, QpStatus, solve_qp
from .models import DcSolution, DcVariant

logger = logging.getLogger(__name__)

# Balance slack tolerated by the adequacy pre-check (p.u.)
_ADEQUACY_TOL = 1e-9


@dataclass(frozen=True)
class GeneratorBlock:
    """Cost and bound terms of the generator variables."""

    hess: np.ndarray
    lin: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    scale: float


def generator_block(case: NetworkCase) -> GeneratorBlock:
    """
    Quadratic cost of the per-unit dispatch, normalized to unit magnitude.

    Out-of-service generators are fixed at zero.
    """
    arr = case.arrays
    base = case.base_mva
    hess = 2.0 * arr.c2 * base * base
    lin = arr.c1 * base
    scale = max(1.0, float(np.max(np.abs(np.r_[hess, lin]), initial=0.0)))
    lb = np.where(arr.gen_on, arr.pmin, 0.0)
    ub = np.where(arr.gen_on, arr.pmax, 0.0)
    return GeneratorBlock(hess=hess / scale, lin=lin / scale, lb=lb, ub=ub, scale=scale)


def check_adequacy(case: NetworkCase, demand: float | None = None) -> None:
    """Raise InfeasibleDispatch when generator limits cannot meet demand."""
    arr = case.arrays
    total = float(arr.pd.sum()) if demand is None else demand
    p_max = float(arr.pmax[arr.gen_on].sum())
    p_min = float(arr.pmin[arr.gen_on].sum())
    if p_max < total - _ADEQUACY_TOL:
        raise InfeasibleDispatch(
            f"Demand {total:.6f} p.u. exceeds total capacity {p_max:.6f} p.u.",
            operation="check_adequacy",
        )
    if p_min > total + _ADEQUACY_TOL:
        raise InfeasibleDispatch(
            f"Minimum generation {p_min:.6f} p.u. exceeds demand {total:.6f} p.u.",
            operation="check_adequacy",
        )


def limited_branches(case: NetworkCase) -> np.ndarray:
    """Positions of in-service branches with a thermal limit."""
    arr = case.arrays
    return np.flatnonzero(arr.br_on & (arr.rate > 0))


def run_qp(variant: DcVariant, problem: QpProblem) -> QpSolution:
    """Solve a dispatch QP and map non-optimal outcomes to dispatch errors."""
    solution = solve_qp(problem)
    if solution.status is QpStatus.INFEASIBLE:
        raise InfeasibleDispatch(
            f"{variant.label} is infeasible under line and generator limits",
            operation=variant.label,
        )
    if not solution.is_optimal:
        raise SolverFailure(variant.label, solution.status.value)
    return solution


def solve_dc_base(case: NetworkCase) -> DcSolution:
    """
    Lossless DC OPF in the angle formulation.

    Variables are ``[theta, p_g]``; the reference angle is fixed at zero.
    """
    check_connectivity(case)
    check_adequacy(case)
    arr = case.arrays
    dc = build_dc_matrices(case)
    gens = generator_block(case)
    cg = generator_incidence(case)
    nb, ng = arr.n_bus, arr.n_gen

    # bbus theta + pbusinj = Cg pg - pd
    a_eq = sp.hstack([dc.bbus, -cg], format="csr")
    b_eq = -arr.pd - dc.pbusinj

    lim = limited_branches(case)
    bf_lim = sp.hstack([dc.bf[lim], sp.csr_matrix((lim.size, ng))], format="csr")
    a_in = sp.vstack([bf_lim, -bf_lim], format="csr")
    b_in = np.r_[arr.rate[lim] - dc.pfinj[lim], arr.rate[lim] + dc.pfinj[lim]]

    lb = np.r_[np.full(nb, -np.inf), gens.lb]
    ub = np.r_[np.full(nb, np.inf), gens.ub]
    lb[arr.ref] = ub[arr.ref] = 0.0

    problem = QpProblem(
        c=np.r_[np.zeros(nb), gens.lin],
        h=sp.diags(np.r_[np.zeros(nb), gens.hess]),
        a_eq=a_eq,
        b_eq=b_eq,
        a_in=a_in,
        b_in=b_in,
        lb=lb,
        ub=ub,
    )
    solution = run_qp(DcVariant.BASE, problem)

    theta = solution.x[:nb].copy()
    theta[arr.ref] = 0.0
    p_g = np.where(arr.gen_on, solution.x[nb:], 0.0)
    flows = dc.bf @ theta + dc.pfinj
    objective = case.generation_cost(p_g)
    logger.info(
        "%s solved for %s: cost %.4f $/h in %d iterations",
        DcVariant.BASE.label,
        case.name,
        objective,
        solution.iterations,
    )
    return DcSolution(
        p_g_sp=tuple(p_g),
        theta_dc=tuple(theta),
        branch_flows=tuple(flows),
        branch_flows_to=tuple(-flows),
        modeled_losses=0.0,
        objective=objective,
        loss_model=DcVariant.BASE,
        iterations=solution.iterations,
    )
