"""Network model and derived matrices."""

from .matpower import load_case, parse_matpower_case
from .matrices import (
    AdmittanceMatrix,
    BranchFlows,
    DcMatrices,
    PtdfMatrix,
    branch_flows,
    branch_incidence,
    build_admittance,
    build_dc_matrices,
    build_ptdf,
    check_connectivity,
    generator_incidence,
    solve_dc_angles,
)
from .model import (
    ROLE_CODES,
    ROLES_BY_CODE,
    Branch,
    Bus,
    BusRole,
    CaseArrays,
    CostCurve,
    Generator,
    NetworkCase,
)

__all__ = [
    # Model
    "ROLE_CODES",
    "ROLES_BY_CODE",
    "Branch",
    "Bus",
    "BusRole",
    "CaseArrays",
    "CostCurve",
    "Generator",
    "NetworkCase",
    # Parsing
    "load_case",
    "parse_matpower_case",
    # Matrices
    "AdmittanceMatrix",
    "BranchFlows",
    "DcMatrices",
    "PtdfMatrix",
    "branch_flows",
    "branch_incidence",
    "build_admittance",
    "build_dc_matrices",
    "build_ptdf",
    "check_connectivity",
    "generator_incidence",
    "solve_dc_angles",
]
