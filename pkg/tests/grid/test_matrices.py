"""Tests for admittance, DC and PTDF matrices."""

import numpy as np
import pytest

from dcac_pipeline.exceptions import IslandedNetwork, SingularBranch
from dcac_pipeline.grid import (
    Branch,
    Bus,
    BusRole,
    Generator,
    NetworkCase,
    branch_flows,
    build_admittance,
    build_dc_matrices,
    build_ptdf,
    check_connectivity,
    solve_dc_angles,
)


def _triangle(**branch_overrides) -> NetworkCase:
    """Three buses, equal reactances, branches 2-1, 2-3, 3-1."""
    branches = tuple(
        Branch(from_bus=f, to_bus=t, x=0.1, **branch_overrides) for f, t in ((2, 1), (2, 3), (3, 1))
    )
    return NetworkCase(
        name="triangle",
        base_mva=100.0,
        buses=(
            Bus(id=1, role=BusRole.REF),
            Bus(id=2, role=BusRole.PQ),
            Bus(id=3, role=BusRole.PQ),
        ),
        branches=branches,
        generators=(Generator(bus=1, p_max=1.0),),
    )


class TestAdmittance:
    """Test the bus admittance matrix."""

    def test_two_bus_series(self, two_bus):
        """Test diagonal and off-diagonal entries of a single line."""
        ybus = build_admittance(two_bus).ybus.toarray()
        y = 1 / (0.01 + 0.1j)

        assert ybus[0, 0] == pytest.approx(y)
        assert ybus[0, 1] == pytest.approx(-y)
        assert ybus[1, 1] == pytest.approx(y)

    def test_bus_shunt(self, two_bus):
        """Test shunt susceptance lands on the diagonal."""
        buses = (two_bus.buses[0], two_bus.buses[1].model_copy(update={"bs": 0.2}))
        case = NetworkCase(
            name="shunt",
            base_mva=100.0,
            buses=buses,
            branches=two_bus.branches,
            generators=two_bus.generators,
        )

        ybus = build_admittance(case).ybus.toarray()
        assert ybus[1, 1] == pytest.approx(1 / (0.01 + 0.1j) + 0.2j)

    def test_triangle_diagonal(self):
        """Test each bus sees two equal branches."""
        ybus = build_admittance(_triangle()).ybus.toarray()
        assert np.allclose(np.diag(ybus), 2 / 0.1j)

    def test_zero_impedance_rejected(self):
        """Test an in-service branch with r = x = 0."""
        case = _triangle()
        branches = (case.branches[0].model_copy(update={"x": 0.0}),) + case.branches[1:]
        case = NetworkCase(
            name="bad", base_mva=100.0, buses=case.buses, branches=branches, generators=case.generators
        )
        with pytest.raises(SingularBranch):
            build_admittance(case)


class TestDcMatrices:
    """Test DC susceptance matrices and PTDF."""

    def test_bbus_laplacian(self):
        """Test rows of Bbus sum to zero."""
        dc = build_dc_matrices(_triangle())
        assert np.allclose(dc.bbus.toarray().sum(axis=1), 0.0)
        assert np.allclose(dc.b, 10.0)

    def test_two_bus_ptdf(self, two_bus):
        """Test injection at bus 2 flows back against the branch."""
        ptdf = build_ptdf(two_bus)
        assert ptdf.matrix == pytest.approx(np.array([[0.0, -1.0]]))
        assert ptdf.slack_bus == 1

    def test_triangle_ptdf(self):
        """Test the direct path carries two thirds."""
        ptdf = build_ptdf(_triangle())
        flows = ptdf.flows(np.array([-1.0, 1.0, 0.0]))

        assert flows == pytest.approx([2 / 3, 1 / 3, 1 / 3])
        assert np.allclose(ptdf.matrix[:, 0], 0.0)

    def test_angles_reproduce_ptdf_flows(self):
        """Test DC angles and PTDF agree on branch flows."""
        case = _triangle()
        injections = np.array([-0.7, 0.4, 0.3])
        theta = solve_dc_angles(case, injections)
        dc = build_dc_matrices(case)

        assert theta[0] == 0.0
        assert dc.bf @ theta == pytest.approx(build_ptdf(case).flows(injections))

    def test_islanded(self):
        """Test an out-of-service cut set splits the network."""
        case = _triangle()
        branches = (case.branches[0],) + tuple(
            b.model_copy(update={"in_service": False}) for b in case.branches[1:]
        )
        case = NetworkCase(
            name="split", base_mva=100.0, buses=case.buses, branches=branches, generators=case.generators
        )
        with pytest.raises(IslandedNetwork) as exc_info:
            check_connectivity(case)
        assert exc_info.value.n_islands == 2


class TestBranchFlows:
    """Test complex branch flows."""

    def test_lossless_branch_symmetric(self):
        """Test both ends carry equal magnitude when r = 0 at flat magnitudes."""
        case = _triangle()
        flows = branch_flows(case, np.ones(3), np.array([0.0, 0.05, -0.02]))

        assert np.abs(flows.s_from) == pytest.approx(np.abs(flows.s_to), abs=1e-9)
        assert flows.losses.real == pytest.approx(0.0, abs=1e-12)

    def test_resistive_losses_positive(self, two_bus):
        """Test series resistance dissipates power."""
        flows = branch_flows(two_bus, np.array([1.0, 0.95]), np.array([0.0, -0.05]))
        assert flows.losses.real[0] > 0
