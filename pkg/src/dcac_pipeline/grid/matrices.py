"""Admittance, DC susceptance and PTDF matrices."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import splu

from ..exceptions import IslandedNetwork, SingularBranch
from .model import NetworkCase

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdmittanceMatrix:
    """
    Bus admittance matrix with per-branch end admittances.

    ``yf @ V`` and ``yt @ V`` give the complex currents injected into each
    branch at its from and to end; out-of-service rows are zero.
    """

    ybus: sp.csr_matrix
    yf: sp.csr_matrix
    yt: sp.csr_matrix


@dataclass(frozen=True)
class DcMatrices:
    """
    DC susceptance model.

    ``P = bbus @ theta + pbusinj`` and ``Pf = bf @ theta + pfinj``.
    """

    bbus: sp.csr_matrix
    bf: sp.csr_matrix
    pbusinj: np.ndarray
    pfinj: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class PtdfMatrix:
    """Dense branch-by-bus injection sensitivities."""

    matrix: np.ndarray
    slack_bus: int
    slack_position: int

    def flows(self, injections: np.ndarray) -> np.ndarray:
        """DC branch flows for a bus injection vector."""
        return self.matrix @ injections


@dataclass(frozen=True)
class BranchFlows:
    """Complex power entering each branch at both ends (p.u.)."""

    s_from: np.ndarray
    s_to: np.ndarray

    @property
    def losses(self) -> np.ndarray:
        """Series and charging losses per branch."""
        return self.s_from + self.s_to


def branch_incidence(case: NetworkCase) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Branch-by-bus incidence of from and to ends."""
    arr = case.arrays
    rows = np.arange(arr.n_branch)
    ones = np.ones(arr.n_branch)
    cf = sp.csr_matrix((ones, (rows, arr.f)), shape=(arr.n_branch, arr.n_bus))
    ct = sp.csr_matrix((ones, (rows, arr.t)), shape=(arr.n_branch, arr.n_bus))
    return cf, ct


def generator_incidence(case: NetworkCase) -> sp.csr_matrix:
    """Bus-by-generator incidence of in-service units."""
    arr = case.arrays
    cols = np.arange(arr.n_gen)
    return sp.csr_matrix(
        (arr.gen_on.astype(float), (arr.gen_bus, cols)), shape=(arr.n_bus, arr.n_gen)
    )


def check_connectivity(case: NetworkCase) -> None:
    """Raise IslandedNetwork unless in-service branches span every bus."""
    arr = case.arrays
    on = arr.br_on
    graph = sp.csr_matrix(
        (np.ones(int(on.sum())), (arr.f[on], arr.t[on])), shape=(arr.n_bus, arr.n_bus)
    )
    n_islands, _ = connected_components(graph, directed=False)
    if n_islands > 1:
        raise IslandedNetwork(int(n_islands))


def build_admittance(case: NetworkCase) -> AdmittanceMatrix:
    """
    Assemble the bus admittance matrix.

    Includes series admittance, line charging split across both ends,
    off-nominal tap and phase shift, and bus shunts.
    """
    arr = case.arrays
    series = arr.r + 1j * arr.x
    zero = arr.br_on & (series == 0)
    if zero.any():
        k = int(np.flatnonzero(zero)[0])
        raise SingularBranch(
            k + 1, int(arr.bus_ids[arr.f[k]]), int(arr.bus_ids[arr.t[k]])
        )

    stat = arr.br_on.astype(float)
    ys = np.zeros(arr.n_branch, dtype=complex)
    ys[arr.br_on] = 1.0 / series[arr.br_on]
    bc = stat * arr.b
    tap = arr.tap * np.exp(1j * arr.shift)

    ytt = ys + 1j * bc / 2
    yff = ytt / (tap * np.conj(tap))
    yft = -ys / np.conj(tap)
    ytf = -ys / tap

    n_br, n_bus = arr.n_branch, arr.n_bus
    rows = np.r_[np.arange(n_br), np.arange(n_br)]
    cols = np.r_[arr.f, arr.t]
    yf = sp.csr_matrix((np.r_[yff, yft], (rows, cols)), shape=(n_br, n_bus))
    yt = sp.csr_matrix((np.r_[ytf, ytt], (rows, cols)), shape=(n_br, n_bus))

    cf, ct = branch_incidence(case)
    ysh = arr.gs + 1j * arr.bs
    ybus = (cf.T @ yf + ct.T @ yt + sp.diags(ysh)).tocsr()
    return AdmittanceMatrix(ybus=ybus, yf=yf, yt=yt)


def build_dc_matrices(case: NetworkCase) -> DcMatrices:
    """Build the DC susceptance matrices and phase-shift injections."""
    arr = case.arrays
    zero_x = arr.br_on & (arr.x == 0)
    if zero_x.any():
        k = int(np.flatnonzero(zero_x)[0])
        raise SingularBranch(
            k + 1, int(arr.bus_ids[arr.f[k]]), int(arr.bus_ids[arr.t[k]])
        )

    b = np.zeros(arr.n_branch)
    b[arr.br_on] = 1.0 / (arr.x[arr.br_on] * arr.tap[arr.br_on])

    cf, ct = branch_incidence(case)
    cft = (cf - ct).tocsr()
    rows = np.r_[np.arange(arr.n_branch), np.arange(arr.n_branch)]
    bf = sp.csr_matrix(
        (np.r_[b, -b], (rows, np.r_[arr.f, arr.t])), shape=(arr.n_branch, arr.n_bus)
    )
    bbus = (cft.T @ bf).tocsr()
    pfinj = -b * arr.shift
    pbusinj = cft.T @ pfinj
    return DcMatrices(bbus=bbus, bf=bf, pbusinj=np.asarray(pbusinj), pfinj=pfinj, b=b)


def build_ptdf(case: NetworkCase, slack: int | None = None) -> PtdfMatrix:
    """
    Build the PTDF matrix for a slack bus.

    Args:
        case: Network case
        slack: Slack bus identifier, defaults to the reference bus

    Returns:
        PtdfMatrix whose slack column is zero
    """
    check_connectivity(case)
    slack = case.ref_bus if slack is None else slack
    s = case.bus_position(slack)
    dc = build_dc_matrices(case)

    n_bus = case.arrays.n_bus
    keep = np.flatnonzero(np.arange(n_bus) != s)
    b_red = dc.bbus[keep][:, keep].tocsc()
    bf_red = dc.bf[:, keep].toarray()

    phi = np.zeros((case.arrays.n_branch, n_bus))
    if len(keep):
        # b_red is symmetric, so inv(B) @ Bf^T gives the transpose
        lu = splu(b_red)
        phi[:, keep] = lu.solve(np.ascontiguousarray(bf_red.T)).T
    logger.debug("Built %dx%d PTDF with slack bus %d", phi.shape[0], phi.shape[1], slack)
    return PtdfMatrix(matrix=phi, slack_bus=slack, slack_position=s)


def solve_dc_angles(case: NetworkCase, injections: np.ndarray) -> np.ndarray:
    """
    Bus angles for a balanced injection vector, reference angle zero.

    Phase-shift injections are taken into account.
    """
    check_connectivity(case)
    dc = build_dc_matrices(case)
    arr = case.arrays
    keep = np.flatnonzero(np.arange(arr.n_bus) != arr.ref)
    theta = np.zeros(arr.n_bus)
    if len(keep):
        rhs = (injections - dc.pbusinj)[keep]
        theta[keep] = splu(dc.bbus[keep][:, keep].tocsc()).solve(rhs)
    return theta


def branch_flows(
    case: NetworkCase,
    vm: np.ndarray,
    va: np.ndarray,
    admittance: AdmittanceMatrix | None = None,
) -> BranchFlows:
    """Complex power flows at both branch ends for a voltage profile."""
    y = admittance if admittance is not None else build_admittance(case)
    arr = case.arrays
    v = vm * np.exp(1j * va)
    s_from = v[arr.f] * np.conj(y.yf @ v)
    s_to = v[arr.t] * np.conj(y.yt @ v)
    return BranchFlows(s_from=s_from, s_to=s_to)
