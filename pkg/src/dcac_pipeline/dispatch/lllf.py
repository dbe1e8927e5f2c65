"""Linear line-loss-factor DC dispatch."""

from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp

from ..exceptions import InfeasibleDispatch, MissingReference
from ..grid.matrices import (
    build_dc_matrices,
    build_ptdf,
    check_connectivity,
    generator_incidence,
    solve_dc_angles,
)
from ..grid.model import NetworkCase
from ..solver import QpProblem
from .base import generator_block, limited_branches, run_qp
from .models import DcSolution, DcVariant, LossFactors

logger = logging.getLogger(__name__)

_BALANCE_TOL = 1e-9


def compute_loss_factors(
    case: NetworkCase,
    reference: DcSolution | None,
    slack: int | None = None,
) -> LossFactors:
    """
    Linearize total branch losses around a reference dispatch.

    The sensitivities apply to the net withdrawal ``p_d - C_g p_g`` at each
    bus, so ``ell_ref + lam @ withdrawal`` reproduces the quadratic losses
    at the reference point.

    Args:
        case: Network case the reference was solved on
        reference: Reference DC solution
        slack: Slack bus identifier for the PTDF, defaults to the reference bus

    Returns:
        LossFactors
    """
    if reference is None:
        raise MissingReference(
            "Loss factors need a reference dispatch", operation="compute_loss_factors"
        )
    arr = case.arrays
    if len(reference.branch_flows) != arr.n_branch or len(reference.p_g_sp) != arr.n_gen:
        raise MissingReference(
            f"Reference dispatch does not match case {case.name}",
            operation="compute_loss_factors",
        )

    ptdf = build_ptdf(case, slack)
    f_ref = np.where(arr.br_on, reference.flows, 0.0)
    lam = -2.0 * (arr.r * f_ref) @ ptdf.matrix
    withdrawal = arr.pd - generator_incidence(case) @ reference.p_g
    ref_losses = float(np.sum(arr.r * f_ref * f_ref))
    ell_ref = ref_losses - float(lam @ withdrawal)
    logger.debug(
        "Loss factors for %s: reference losses %.6e p.u., ell_ref %.6e",
        case.name,
        ref_losses,
        ell_ref,
    )
    return LossFactors(
        lam=tuple(lam),
        ell_ref=ell_ref,
        ref_flows=tuple(f_ref),
        ref_withdrawal=tuple(withdrawal),
        slack_bus=ptdf.slack_bus,
    )


def solve_dc_lllf(case: NetworkCase, factors: LossFactors) -> DcSolution:
    """
    DC OPF with linearized losses in a single system balance row.

    Line flows follow the PTDF of the loss-factor slack bus; angles are
    recovered afterwards from a DC flow with the dispatch fixed.
    """
    check_connectivity(case)
    arr = case.arrays
    if len(factors.lam) != arr.n_bus:
        raise MissingReference(
            f"Loss factors do not match case {case.name}", operation="solve_dc_lllf"
        )
    lam = factors.lam_vector
    gens = generator_block(case)
    cg = generator_incidence(case)
    dc = build_dc_matrices(case)
    ptdf = build_ptdf(case, factors.slack_bus)

    # sum(pg) = sum(pd) + ell_ref + lam @ (pd - Cg pg)
    on = arr.gen_on.astype(float)
    row = on + cg.T @ lam
    rhs = float(arr.pd.sum() + factors.ell_ref + lam @ arr.pd)
    lo = float(np.minimum(row * gens.lb, row * gens.ub).sum())
    hi = float(np.maximum(row * gens.lb, row * gens.ub).sum())
    if not lo - _BALANCE_TOL <= rhs <= hi + _BALANCE_TOL:
        raise InfeasibleDispatch(
            f"Loss-adjusted demand {rhs:.6f} p.u. is outside [{lo:.6f}, {hi:.6f}]",
            operation="solve_dc_lllf",
        )

    lim = limited_branches(case)
    phi = ptdf.matrix[lim]
    # flows = phi (Cg pg - pd - pbusinj) + pfinj
    offset = -phi @ (arr.pd + dc.pbusinj) + dc.pfinj[lim]
    a_flow = sp.csr_matrix(phi @ cg.toarray())
    a_in = sp.vstack([a_flow, -a_flow], format="csr")
    b_in = np.r_[arr.rate[lim] - offset, arr.rate[lim] + offset]

    problem = QpProblem(
        c=gens.lin,
        h=sp.diags(gens.hess),
        a_eq=sp.csr_matrix(row.reshape(1, -1)),
        b_eq=np.array([rhs]),
        a_in=a_in,
        b_in=b_in,
        lb=gens.lb,
        ub=gens.ub,
    )
    solution = run_qp(DcVariant.LLLF, problem)

    p_g = np.where(arr.gen_on, solution.x, 0.0)
    injection = cg @ p_g - arr.pd
    theta = solve_dc_angles(case, injection)
    flows = ptdf.flows(injection - dc.pbusinj) + dc.pfinj
    losses = factors.losses_at(-injection)
    objective = case.generation_cost(p_g)
    logger.info(
        "%s solved for %s: cost %.4f $/h, modeled losses %.6f p.u.",
        DcVariant.LLLF.label,
        case.name,
        objective,
        losses,
    )
    return DcSolution(
        p_g_sp=tuple(p_g),
        theta_dc=tuple(theta),
        branch_flows=tuple(flows),
        branch_flows_to=tuple(-flows),
        modeled_losses=losses,
        objective=objective,
        loss_model=DcVariant.LLLF,
        iterations=solution.iterations,
    )
