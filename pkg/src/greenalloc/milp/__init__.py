"""Linear model representation plus a bundled LP/MILP solver."""
from .model import (
    BINARY, CONTINUOUS, LE, EQ, GE, MIN, MAX,
    OPTIMAL, INFEASIBLE, UNBOUNDED, GAP_LIMIT, NODE_LIMIT, NUMERICAL_FAILURE,
    LinearConstraint, MilpModel, MilpSolution, ModelError, ToleranceConfig,
    Variable, check_solution,
)
from .simplex import solve_lp
from .branch_and_bound import solve_milp
from .mps import export_mps

__all__ = [
    "BINARY", "CONTINUOUS", "LE", "EQ", "GE", "MIN", "MAX",
    "OPTIMAL", "INFEASIBLE", "UNBOUNDED", "GAP_LIMIT", "NODE_LIMIT",
    "NUMERICAL_FAILURE", "LinearConstraint", "MilpModel", "MilpSolution",
    "ModelError", "ToleranceConfig", "Variable", "check_solution",
    "solve_lp", "solve_milp", "export_mps",
]
