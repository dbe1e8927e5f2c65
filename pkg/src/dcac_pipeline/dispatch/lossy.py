"""DC dispatch with directed branch flows and outer-approximated quadratic losses."""

from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp

from ..config import get_pipeline_config
from ..exceptions import CutLoopDiverged, MissingReference
from ..grid.matrices import (
    branch_incidence,
    build_dc_matrices,
    check_connectivity,
    generator_incidence,
)
from ..grid.model import NetworkCase
from ..solver import QpProblem, QpSolution
from .base import check_adequacy, generator_block, run_qp, solve_dc_base
from .models import DcSolution, DcVariant

logger = logging.getLogger(__name__)

# Cut points closer than this to an existing one are skipped
_CUT_SPACING = 1e-10


def _zeros(rows: int, cols: int) -> sp.csr_matrix:
    return sp.csr_matrix((rows, cols))


class DirectedFlowModel:
    """
    DC OPF over ``[theta, p_g, p_from, p_to]``.

    Each bus balances generation against the flow leaving it at either
    branch end. On a resistive branch ``p_from + p_to`` is the branch loss,
    bounded below by tangent cuts of ``r * p_from**2``; on a lossless branch
    the two ends are tied.
    """

    def __init__(self, case: NetworkCase):
        check_connectivity(case)
        check_adequacy(case)
        self.case = case
        arr = case.arrays
        nb, ng, nl = arr.n_bus, arr.n_gen, arr.n_branch
        self.nb, self.ng, self.nl = nb, ng, nl
        self.n = nb + ng + 2 * nl

        dc = build_dc_matrices(case)
        cf, ct = branch_incidence(case)
        cg = generator_incidence(case)
        gens = generator_block(case)
        self.gens = gens

        on = np.flatnonzero(arr.br_on)
        self.lossy = np.flatnonzero(arr.br_on & (arr.r > 0))
        lossless = np.flatnonzero(arr.br_on & (arr.r == 0))

        eye = sp.identity(nl, format="csr")
        balance = sp.hstack([_zeros(nb, nb), cg, -cf.T, -ct.T], format="csr")
        definition = sp.hstack(
            [-dc.bf[on], _zeros(on.size, ng), eye[on], _zeros(on.size, nl)], format="csr"
        )
        tie = sp.hstack(
            [_zeros(lossless.size, nb + ng), eye[lossless], eye[lossless]], format="csr"
        )
        self.a_eq = sp.vstack([balance, definition, tie], format="csr")
        self.b_eq = np.r_[arr.pd, dc.pfinj[on], np.zeros(lossless.size)]

        rate = np.where(arr.rate > 0, arr.rate, np.inf)
        flow_lim = np.where(arr.br_on, rate, 0.0)
        self.lb = np.r_[np.full(nb, -np.inf), gens.lb, -flow_lim, -flow_lim]
        self.ub = np.r_[np.full(nb, np.inf), gens.ub, flow_lim, flow_lim]
        self.lb[arr.ref] = self.ub[arr.ref] = 0.0

        self.c = np.r_[np.zeros(nb), gens.lin, np.zeros(2 * nl)]
        self.h = sp.diags(np.r_[np.zeros(nb), gens.hess, np.zeros(2 * nl)])

        self.cut_points: list[list[float]] = [[] for _ in range(nl)]
        self.add_cuts(np.zeros(nl))

    @property
    def n_cuts(self) -> int:
        return sum(len(points) for points in self.cut_points)

    def add_cuts(self, flows: np.ndarray) -> int:
        """Add tangent cuts at the given from-end flows, returning how many were new."""
        added = 0
        for k in self.lossy:
            fk = float(flows[k])
            if all(abs(fk - p) > _CUT_SPACING for p in self.cut_points[k]):
                self.cut_points[k].append(fk)
                added += 1
        return added

    def _cut_rows(self) -> tuple[sp.csr_matrix, np.ndarray]:
        r = self.case.arrays.r
        rows, cols, vals, rhs = [], [], [], []
        pf0, pt0 = self.nb + self.ng, self.nb + self.ng + self.nl
        row = 0
        for k in self.lossy:
            for fk in self.cut_points[k]:
                # p_from + p_to >= r (2 fk p_from - fk^2)
                rows += [row, row]
                cols += [pf0 + k, pt0 + k]
                vals += [2.0 * r[k] * fk - 1.0, -1.0]
                rhs.append(r[k] * fk * fk)
                row += 1
        a_in = sp.csr_matrix((vals, (rows, cols)), shape=(row, self.n))
        return a_in, np.asarray(rhs, dtype=float)

    def solve(self, variant: DcVariant) -> QpSolution:
        a_in, b_in = self._cut_rows()
        problem = QpProblem(
            c=self.c,
            h=self.h,
            a_eq=self.a_eq,
            b_eq=self.b_eq,
            a_in=a_in,
            b_in=b_in,
            lb=self.lb,
            ub=self.ub,
        )
        return run_qp(variant, problem)

    def split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        nb, ng, nl = self.nb, self.ng, self.nl
        theta = x[:nb].copy()
        theta[self.case.arrays.ref] = 0.0
        p_g = np.where(self.case.arrays.gen_on, x[nb : nb + ng], 0.0)
        p_from = x[nb + ng : nb + ng + nl]
        p_to = x[nb + ng + nl :]
        return theta, p_g, p_from, p_to

    def losses(self, p_from: np.ndarray, p_to: np.ndarray) -> float:
        """Modeled losses summed over resistive branches."""
        return float(np.sum(p_from[self.lossy] + p_to[self.lossy]))

    def to_solution(
        self, variant: DcVariant, x: np.ndarray, iterations: int, rounds: int
    ) -> DcSolution:
        theta, p_g, p_from, p_to = self.split(x)
        return DcSolution(
            p_g_sp=tuple(p_g),
            theta_dc=tuple(theta),
            branch_flows=tuple(p_from),
            branch_flows_to=tuple(p_to),
            modeled_losses=self.losses(p_from, p_to),
            objective=self.case.generation_cost(p_g),
            loss_model=variant,
            iterations=iterations,
            cut_rounds=rounds,
        )


def solve_dc_lloa(case: NetworkCase, reference: DcSolution | None) -> DcSolution:
    """
    DC OPF with one supporting-hyperplane loss cut per branch.

    Cuts are placed at the reference from-end flows and at zero flow.
    """
    if reference is None:
        raise MissingReference(
            "LLOA needs a reference dispatch", operation="solve_dc_lloa"
        )
    if len(reference.branch_flows) != case.arrays.n_branch:
        raise MissingReference(
            f"Reference dispatch does not match case {case.name}",
            operation="solve_dc_lloa",
        )
    model = DirectedFlowModel(case)
    model.add_cuts(reference.flows)
    solution = model.solve(DcVariant.LLOA)
    result = model.to_solution(DcVariant.LLOA, solution.x, solution.iterations, 1)
    logger.info(
        "%s solved for %s: cost %.4f $/h, modeled losses %.6f p.u.",
        DcVariant.LLOA.label,
        case.name,
        result.objective,
        result.modeled_losses,
    )
    return result


def solve_dc_lqcp(
    case: NetworkCase,
    tol_loss: float | None = None,
    reference: DcSolution | None = None,
    max_rounds: int | None = None,
) -> DcSolution:
    """
    DC OPF with convex quadratic branch losses, solved by iterated outer approximation.

    Starting from cuts at zero flow and at the lossless dispatch, each round adds
    the tangent cut at the current flows until modeled losses settle.

    Args:
        case: Network case
        tol_loss: Relative change in modeled losses that ends the loop
        reference: Starting operating point, defaults to the lossless dispatch
        max_rounds: Round limit

    Returns:
        DcSolution with ``cut_rounds`` set to the number of solves
    """
    config = get_pipeline_config()
    tol_loss = config.loss_tol if tol_loss is None else tol_loss
    max_rounds = config.max_cut_rounds if max_rounds is None else max_rounds
    if tol_loss <= 0:
        raise ValueError(f"tol_loss must be positive, got {tol_loss}")

    start = reference if reference is not None else solve_dc_base(case)
    model = DirectedFlowModel(case)
    model.add_cuts(start.flows)

    floor = 10.0 * config.qp_tol
    previous: float | None = None
    change = float("inf")
    iterations = 0
    for round_no in range(1, max_rounds + 1):
        solution = model.solve(DcVariant.LQCP)
        iterations += solution.iterations
        _, _, p_from, p_to = model.split(solution.x)
        losses = model.losses(p_from, p_to)
        if previous is not None:
            change = abs(losses - previous)
            logger.debug(
                "LQCP round %d: losses %.10e p.u., change %.3e, %d cuts",
                round_no,
                losses,
                change,
                model.n_cuts,
            )
            if change <= max(tol_loss * abs(losses), floor):
                result = model.to_solution(DcVariant.LQCP, solution.x, iterations, round_no)
                logger.info(
                    "%s solved for %s in %d rounds: cost %.4f $/h, modeled losses %.6f p.u.",
                    DcVariant.LQCP.label,
                    case.name,
                    round_no,
                    result.objective,
                    result.modeled_losses,
                )
                return result
        previous = losses
        if model.add_cuts(p_from) == 0:
            # every tangent is already present; the cut set cannot tighten further
            return model.to_solution(DcVariant.LQCP, solution.x, iterations, round_no)

    raise CutLoopDiverged(max_rounds, change)
