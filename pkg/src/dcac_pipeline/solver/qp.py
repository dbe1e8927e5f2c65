"""Primal-dual interior-point solver for convex quadratic programs."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..config import get_pipeline_config
from ..exceptions import DimensionMismatch
from ..metrics import get_pipeline_metrics
from ..utils.retry import regularized_retry

logger = logging.getLogger(__name__)

# Infeasibility detection
_STALL_WINDOW = 10
_STALL_FLOOR = 1e-6
_DUAL_DIVERGENCE = 1e8
_UNBOUNDED_NORM = 1e10
_STEP_FRACTION = 0.99


class QpStatus(str, Enum):
    """Termination status of an interior-point solve."""

    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    MAX_ITER = "MaxIter"


@dataclass(frozen=True)
class QpProblem:
    """
    min 0.5 x'Hx + c'x  s.t.  a_eq x = b_eq,  a_in x <= b_in,  lb <= x <= ub.

    Missing blocks default to empty; infinite bounds are dropped.
    """

    c: np.ndarray
    h: sp.spmatrix | np.ndarray | None = None
    a_eq: sp.spmatrix | np.ndarray | None = None
    b_eq: np.ndarray | None = None
    a_in: sp.spmatrix | np.ndarray | None = None
    b_in: np.ndarray | None = None
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None

    @property
    def n(self) -> int:
        return len(self.c)


@dataclass(frozen=True)
class QpSolution:
    """Primal and dual solution of a QpProblem."""

    x: np.ndarray
    objective: float
    status: QpStatus
    duals_eq: np.ndarray
    duals_in: np.ndarray
    mu_lb: np.ndarray
    mu_ub: np.ndarray
    iterations: int
    residuals: dict[str, float] = field(default_factory=dict)

    @property
    def is_optimal(self) -> bool:
        return self.status is QpStatus.OPTIMAL


@dataclass(frozen=True)
class _Standard:
    """Problem rewritten as equalities plus one stacked inequality block."""

    hess: sp.csc_matrix
    c: np.ndarray
    a: sp.csr_matrix
    b: np.ndarray
    g: sp.csr_matrix
    h: np.ndarray
    n_eq: int
    n_in: int
    fixed: np.ndarray
    lb_idx: np.ndarray
    ub_idx: np.ndarray


def _as_sparse(m, rows: int, cols: int, what: str) -> sp.csr_matrix:
    if m is None:
        return sp.csr_matrix((rows, cols))
    out = sp.csr_matrix(m, dtype=float)
    if out.shape[1] != cols:
        raise DimensionMismatch(what, f"(*, {cols})", out.shape, stage="solver")
    return out


def _vector(v, size: int, what: str, fill: float = 0.0) -> np.ndarray:
    if v is None:
        return np.full(size, fill)
    out = np.asarray(v, dtype=float).ravel()
    if out.shape != (size,):
        raise DimensionMismatch(what, size, out.shape[0], stage="solver")
    return out


def _standardize(problem: QpProblem) -> _Standard:
    n = problem.n
    c = _vector(problem.c, n, "c")
    hess = _as_sparse(problem.h, n, n, "H")
    if hess.shape[0] != n:
        raise DimensionMismatch("H", (n, n), hess.shape, stage="solver")

    a_eq = _as_sparse(problem.a_eq, 0, n, "A_eq")
    b_eq = _vector(problem.b_eq, a_eq.shape[0], "b_eq")
    a_in = _as_sparse(problem.a_in, 0, n, "A_in")
    b_in = _vector(problem.b_in, a_in.shape[0], "b_in")
    lb = _vector(problem.lb, n, "lb", fill=-np.inf)
    ub = _vector(problem.ub, n, "ub", fill=np.inf)

    fixed = np.flatnonzero(lb == ub)
    free = lb != ub
    lb_idx = np.flatnonzero(free & np.isfinite(lb))
    ub_idx = np.flatnonzero(free & np.isfinite(ub))

    eye = sp.identity(n, format="csr")
    a = sp.vstack([a_eq, eye[fixed]], format="csr")
    b = np.r_[b_eq, lb[fixed]]
    g = sp.vstack([a_in, eye[ub_idx], -eye[lb_idx]], format="csr")
    h = np.r_[b_in, ub[ub_idx], -lb[lb_idx]]
    return _Standard(
        hess=hess.tocsc(),
        c=c,
        a=a,
        b=b,
        g=g,
        h=h,
        n_eq=a_eq.shape[0],
        n_in=a_in.shape[0],
        fixed=fixed,
        lb_idx=lb_idx,
        ub_idx=ub_idx,
    )


def _max_step(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    if not neg.any():
        return 1.0
    return float(min(1.0, np.min(-v[neg] / dv[neg])))


class _KktSystem:
    """Reduced KKT matrix for one interior-point iteration."""

    def __init__(self, qp: _Standard, w: np.ndarray, regularization: float, retries: int):
        self.qp = qp
        self.w = w
        n, m = qp.c.size, qp.b.size
        core = qp.hess + qp.g.T @ sp.diags(w) @ qp.g if w.size else qp.hess

        def factorize(delta: float):
            upper = core + delta * sp.identity(n)
            if m:
                kkt = sp.bmat(
                    [[upper, qp.a.T], [qp.a, -delta * sp.identity(m)]], format="csc"
                )
            else:
                kkt = sp.csc_matrix(upper)
            lu = splu(kkt)
            trial = lu.solve(np.ones(n + m))
            if not np.all(np.isfinite(trial)):
                raise ArithmeticError("KKT factorization produced non-finite values")
            return lu

        self.lu = regularized_retry(factorize, regularization, retries)

    def solve(
        self,
        s: np.ndarray,
        z: np.ndarray,
        rd: np.ndarray,
        rp: np.ndarray,
        rg: np.ndarray,
        rc: np.ndarray,
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        qp = self.qp
        n = qp.c.size
        tail = (rc + z * rg) / s
        rhs = np.r_[-rd - qp.g.T @ tail, -rp]
        sol = self.lu.solve(rhs)
        dx, dy = sol[:n], sol[n:]
        ds = -rg - qp.g @ dx
        dz = tail + self.w * (qp.g @ dx)
        return dx, dy, ds, dz


def _objective(qp: _Standard, x: np.ndarray) -> float:
    return float(0.5 * x @ (qp.hess @ x) + qp.c @ x)


def _initial_point(
    qp: _Standard, regularization: float, retries: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    n, p = qp.c.size, qp.h.size
    kkt = _KktSystem(qp, np.ones(p), regularization, retries)
    # least-squares start: minimize the objective plus 0.5*||h - Gx||^2
    rhs = np.r_[-qp.c + qp.g.T @ qp.h, qp.b]
    sol = kkt.lu.solve(rhs)
    x, y = sol[:n], sol[n:]
    s = np.maximum(qp.h - qp.g @ x, 1.0)
    z = np.ones(p)
    return x, y, s, z


def solve_qp(
    problem: QpProblem,
    tol: float | None = None,
    max_iter: int | None = None,
) -> QpSolution:
    """
    Solve a convex QP with a Mehrotra predictor-corrector interior-point method.

    Args:
        problem: Quadratic program with PSD Hessian
        tol: Scaled KKT residual tolerance
        max_iter: Iteration limit

    Returns:
        QpSolution; status Optimal means all scaled residuals are below ``tol``
    """
    config = get_pipeline_config()
    tol = config.qp_tol if tol is None else tol
    max_iter = config.qp_max_iter if max_iter is None else max_iter
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")

    qp = _standardize(problem)
    n, p = qp.c.size, qp.h.size
    reg, retries = config.qp_regularization, config.qp_regularization_retries

    x, y, s, z = _initial_point(qp, reg, retries)
    scale_b = 1.0 + (np.max(np.abs(qp.b)) if qp.b.size else 0.0)
    scale_h = 1.0 + (np.max(np.abs(qp.h)) if p else 0.0)
    scale_c = 1.0 + (np.max(np.abs(qp.c)) if n else 0.0)

    status = QpStatus.MAX_ITER
    pres_history: list[float] = []
    dual_history: list[float] = []
    residuals: dict[str, float] = {}
    iteration = 0

    for iteration in range(1, max_iter + 1):
        rd = qp.hess @ x + qp.c + qp.a.T @ y + qp.g.T @ z
        rp = qp.a @ x - qp.b
        rg = qp.g @ x + s - qp.h
        obj = _objective(qp, x)

        pres = max(
            float(np.max(np.abs(rp))) / scale_b if rp.size else 0.0,
            float(np.max(np.abs(rg))) / scale_h if p else 0.0,
        )
        dres = float(np.max(np.abs(rd))) / scale_c if n else 0.0
        comp = float(np.max(s * z)) / (1.0 + abs(obj)) if p else 0.0
        residuals = {"primal": pres, "dual": dres, "complementarity": comp}
        logger.debug(
            "qp iter %d: obj=%.8e pres=%.2e dres=%.2e comp=%.2e",
            iteration,
            obj,
            pres,
            dres,
            comp,
        )

        if pres <= tol and dres <= tol and comp <= tol:
            status = QpStatus.OPTIMAL
            break

        dual_norm = max(
            float(np.max(np.abs(y))) if y.size else 0.0,
            float(np.max(z)) if p else 0.0,
        )
        pres_history.append(pres)
        dual_history.append(dual_norm)
        if len(pres_history) > _STALL_WINDOW:
            earlier = pres_history[-_STALL_WINDOW - 1]
            stalled = pres > _STALL_FLOOR and pres > 0.5 * earlier
            diverging = (
                dual_norm > _DUAL_DIVERGENCE
                and dual_norm > dual_history[-_STALL_WINDOW - 1]
            )
            if stalled and diverging:
                status = QpStatus.INFEASIBLE
                break
        if np.max(np.abs(x), initial=0.0) > _UNBOUNDED_NORM:
            status = QpStatus.UNBOUNDED
            break

        mu = float(s @ z) / p if p else 0.0
        w = z / s
        kkt = _KktSystem(qp, w, reg, retries)

        # predictor
        dx, dy, ds, dz = kkt.solve(s, z, rd, rp, rg, -s * z)
        alpha = min(_max_step(s, ds), _max_step(z, dz))
        if p:
            mu_aff = float((s + alpha * ds) @ (z + alpha * dz)) / p
            sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
            # corrector
            rc = -s * z - ds * dz + sigma * mu
            dx, dy, ds, dz = kkt.solve(s, z, rd, rp, rg, rc)
            alpha = min(1.0, _STEP_FRACTION * min(_max_step(s, ds), _max_step(z, dz)))
        else:
            alpha = 1.0

        x = x + alpha * dx
        y = y + alpha * dy
        s = s + alpha * ds
        z = z + alpha * dz
    else:
        dual_norm = max(
            float(np.max(np.abs(y))) if y.size else 0.0,
            float(np.max(z)) if p else 0.0,
        )
        if residuals.get("primal", 0.0) > _STALL_FLOOR and dual_norm > _DUAL_DIVERGENCE:
            status = QpStatus.INFEASIBLE

    solution = _unpack(qp, problem.n, x, y, z, status, iteration, residuals)
    get_pipeline_metrics().record_solver("qp", iteration, status.value)
    if status is QpStatus.OPTIMAL:
        logger.debug("qp solved in %d iterations, objective %.10g", iteration, solution.objective)
    else:
        logger.warning("qp ended with status %s after %d iterations", status.value, iteration)
    return solution


def _unpack(
    qp: _Standard,
    n: int,
    x: np.ndarray,
    y: np.ndarray,
    z: np.ndarray,
    status: QpStatus,
    iterations: int,
    residuals: dict[str, float],
) -> QpSolution:
    n_ub = qp.ub_idx.size
    mu_lb = np.zeros(n)
    mu_ub = np.zeros(n)
    mu_ub[qp.ub_idx] = z[qp.n_in : qp.n_in + n_ub]
    mu_lb[qp.lb_idx] = z[qp.n_in + n_ub :]
    # a fixed variable's equality dual acts as an upper or lower bound dual
    y_fixed = y[qp.n_eq :]
    mu_ub[qp.fixed] = np.maximum(y_fixed, 0.0)
    mu_lb[qp.fixed] = np.maximum(-y_fixed, 0.0)
    return QpSolution(
        x=x,
        objective=_objective(qp, x),
        status=status,
        duals_eq=y[: qp.n_eq],
        duals_in=z[: qp.n_in],
        mu_lb=mu_lb,
        mu_ub=mu_ub,
        iterations=iterations,
        residuals=residuals,
    )
