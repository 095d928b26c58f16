"""Solver-agnostic linear model representation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

CONTINUOUS = "continuous"
BINARY = "binary"

LE = "<="
EQ = "="
GE = ">="

MIN = "min"
MAX = "max"

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
GAP_LIMIT = "gap_limit"
NODE_LIMIT = "node_limit"
NUMERICAL_FAILURE = "numerical_failure"


class ModelError(ValueError):
    """Raised for ill-formed models or constraints."""


@dataclass
class Variable:
    id: int
    name: str
    lb: float = 0.0
    ub: float = math.inf
    kind: str = CONTINUOUS

    def __post_init__(self):
        if self.kind not in (CONTINUOUS, BINARY):
            raise ModelError(f"unknown variable kind {self.kind!r}")
        if self.lb > self.ub:
            raise ModelError(f"variable {self.name}: lb {self.lb} > ub {self.ub}")
        if self.kind == BINARY and (self.lb < 0 or self.ub > 1):
            raise ModelError(f"binary variable {self.name} must have bounds within [0, 1]")


@dataclass
class LinearConstraint:
    name: str
    coeffs: dict[int, float]
    sense: str
    rhs: float

    def __post_init__(self):
        if self.sense not in (LE, EQ, GE):
            raise ModelError(f"constraint {self.name}: unknown sense {self.sense!r}")
        for vid, c in self.coeffs.items():
            if not math.isfinite(c):
                raise ModelError(f"constraint {self.name}: non-finite coefficient on var {vid}")
        if not math.isfinite(self.rhs):
            raise ModelError(f"constraint {self.name}: non-finite rhs")


@dataclass
class ToleranceConfig:
    feasibility_tol: float = 1e-7
    optimality_tol: float = 1e-7
    integrality_tol: float = 1e-6
    rel_gap: float = 1e-6
    node_limit: int = 200_000


@dataclass
class MilpSolution:
    status: str
    objective: float
    values: np.ndarray
    nodes: int = 0
    best_bound: float = math.nan
    rel_gap: float = math.nan


class MilpModel:
    """Variables, linear constraints, and one linear objective."""

    def __init__(self, name: str = "model", sense: str = MIN):
        if sense not in (MIN, MAX):
            raise ModelError(f"unknown objective sense {sense!r}")
        self.name = name
        self.sense = sense
        self.variables: list[Variable] = []
        self.constraints: list[LinearConstraint] = []
        self.objective: dict[int, float] = {}
        self.objective_const: float = 0.0

    def add_var(self, name: str, lb: float = 0.0, ub: float = math.inf,
                kind: str = CONTINUOUS) -> int:
        if kind == BINARY and math.isinf(ub):
            ub = 1.0
        vid = len(self.variables)
        self.variables.append(Variable(vid, name, lb, ub, kind))
        return vid

    def add_constraint(self, name: str, coeffs: dict[int, float], sense: str,
                       rhs: float) -> None:
        n = len(self.variables)
        for vid in coeffs:
            if not 0 <= vid < n:
                raise ModelError(f"constraint {name} references unknown variable {vid}")
        self.constraints.append(LinearConstraint(name, dict(coeffs), sense, float(rhs)))

    def set_objective(self, coeffs: dict[int, float], constant: float = 0.0,
                      sense: str | None = None) -> None:
        n = len(self.variables)
        for vid in coeffs:
            if not 0 <= vid < n:
                raise ModelError(f"objective references unknown variable {vid}")
        self.objective = dict(coeffs)
        self.objective_const = float(constant)
        if sense is not None:
            if sense not in (MIN, MAX):
                raise ModelError(f"unknown objective sense {sense!r}")
            self.sense = sense

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    def binary_ids(self) -> list[int]:
        return [v.id for v in self.variables if v.kind == BINARY]

    def lower_bounds(self) -> np.ndarray:
        return np.array([v.lb for v in self.variables], dtype=float)

    def upper_bounds(self) -> np.ndarray:
        return np.array([v.ub for v in self.variables], dtype=float)

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.n_vars)
        for vid, coef in self.objective.items():
            c[vid] = coef
        return c

    def objective_value(self, values: np.ndarray) -> float:
        total = self.objective_const
        for vid, coef in self.objective.items():
            total += coef * values[vid]
        return float(total)


def check_solution(model: MilpModel, values: np.ndarray, tol: float = 1e-6) -> list[str]:
    """Independent feasibility audit of a candidate point.

    Evaluates every constraint and bound directly from the model data; shares
    no code with the simplex machinery.
    """
    violations: list[str] = []
    values = np.asarray(values, dtype=float)
    if values.shape != (model.n_vars,):
        return [f"value vector has shape {values.shape}, expected ({model.n_vars},)"]
    for var in model.variables:
        x = values[var.id]
        if x < var.lb - tol or x > var.ub + tol:
            violations.append(
                f"variable {var.name}={x:g} outside bounds [{var.lb:g}, {var.ub:g}]")
        if var.kind == BINARY and abs(x - round(x)) > tol:
            violations.append(f"binary variable {var.name}={x:g} not integral")
    for con in model.constraints:
        lhs = sum(coef * values[vid] for vid, coef in con.coeffs.items())
        resid = lhs - con.rhs
        # backward-error scale: residual judged against the row's term sizes
        scale = 1.0 + abs(con.rhs) + sum(
            abs(coef * values[vid]) for vid, coef in con.coeffs.items())
        if con.sense == LE and resid > tol * scale:
            violations.append(f"constraint {con.name}: {lhs:g} > {con.rhs:g}")
        elif con.sense == GE and resid < -tol * scale:
            violations.append(f"constraint {con.name}: {lhs:g} < {con.rhs:g}")
        elif con.sense == EQ and abs(resid) > tol * scale:
            violations.append(f"constraint {con.name}: {lhs:g} != {con.rhs:g}")
    return violations
