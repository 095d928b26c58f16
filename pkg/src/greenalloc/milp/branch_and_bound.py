"""Best-first branch-and-bound over binary variables."""
from __future__ import annotations

import heapq
import math

import numpy as np

from .model import (
    MIN, OPTIMAL, INFEASIBLE, UNBOUNDED, GAP_LIMIT, NUMERICAL_FAILURE,
    MilpModel, MilpSolution, ToleranceConfig, check_solution,
)
from .simplex import _Standardized


def _relative_gap(incumbent: float, bound: float) -> float:
    if not (math.isfinite(incumbent) and math.isfinite(bound)):
        return math.inf
    return abs(incumbent - bound) / max(1.0, abs(incumbent))


def solve_milp(model: MilpModel, tol: ToleranceConfig | None = None,
               incumbent_callback=None) -> MilpSolution:
    """Solve a MILP with binary integer variables.

    Branching picks the most fractional binary, lowest variable id on ties;
    the node queue is ordered by parent bound (best-first), then creation
    order, so runs are reproducible. ``incumbent_callback(x_lp)`` may return
    a candidate feasible point used to tighten the incumbent; candidates are
    audited before acceptance.
    """
    tol = tol or ToleranceConfig()
    std = _Standardized(model)
    binaries = np.array(model.binary_ids(), dtype=np.int64)
    base_lb = model.lower_bounds()
    base_ub = model.upper_bounds()
    minimize = model.sense == MIN
    sign = 1.0 if minimize else -1.0   # internal bounds compared in min space

    best_x = None
    best_obj = math.inf                # in min space, excludes objective const
    nodes_explored = 0

    def try_incumbent(x):
        nonlocal best_x, best_obj
        if x is None:
            return
        x = np.asarray(x, dtype=float)
        if check_solution(model, x, tol=max(1e-6, tol.integrality_tol)):
            return
        x = x.copy()
        x[binaries] = np.round(x[binaries])
        obj = sign * (model.objective_value(x) - model.objective_const)
        if obj < best_obj - 1e-12:
            best_obj = obj
            best_x = x

    counter = 0
    heap = [(-math.inf, counter, base_lb, base_ub)]
    global_bound = -math.inf

    final_status = OPTIMAL
    while heap:
        parent_bound, _, lb, ub = heapq.heappop(heap)
        global_bound = parent_bound
        if parent_bound >= best_obj - max(1.0, abs(best_obj)) * tol.rel_gap:
            break
        if nodes_explored >= tol.node_limit:
            final_status = GAP_LIMIT
            break

        nodes_explored += 1
        sol = std.solve(lb, ub, tol)
        if sol.status == INFEASIBLE:
            continue
        if sol.status == UNBOUNDED:
            if nodes_explored == 1:
                return MilpSolution(UNBOUNDED, math.nan, np.array([]),
                                    nodes=nodes_explored)
            continue
        if sol.status == NUMERICAL_FAILURE:
            return MilpSolution(NUMERICAL_FAILURE, math.nan, np.array([]),
                                nodes=nodes_explored)

        node_obj = sign * sol.objective
        if node_obj >= best_obj - max(1.0, abs(best_obj)) * tol.rel_gap:
            continue

        x = sol.values
        if incumbent_callback is not None:
            try_incumbent(incumbent_callback(x))

        frac = np.abs(x[binaries] - np.round(x[binaries])) if binaries.size else np.array([])
        if binaries.size == 0 or np.all(frac <= tol.integrality_tol):
            try_incumbent(x)
            continue

        # most fractional binary; ties broken by lowest variable id
        distance = np.minimum(x[binaries] - np.floor(x[binaries]),
                              np.ceil(x[binaries]) - x[binaries])
        distance[frac <= tol.integrality_tol] = -1.0
        k = int(np.argmax(distance))
        branch_var = int(binaries[k])

        for fixed in (0.0, 1.0):
            lb2 = lb.copy()
            ub2 = ub.copy()
            lb2[branch_var] = fixed
            ub2[branch_var] = fixed
            counter += 1
            heapq.heappush(heap, (node_obj, counter, lb2, ub2))

    if not heap and final_status == OPTIMAL:
        global_bound = best_obj if best_x is not None else global_bound

    if best_x is None:
        if final_status == GAP_LIMIT:
            return MilpSolution(GAP_LIMIT, math.nan, np.array([]),
                                nodes=nodes_explored, best_bound=sign * global_bound,
                                rel_gap=math.inf)
        return MilpSolution(INFEASIBLE, math.nan, np.array([]), nodes=nodes_explored)

    objective = sign * best_obj + model.objective_const
    bound = sign * min(global_bound, best_obj) + model.objective_const
    gap = _relative_gap(sign * best_obj, sign * min(global_bound, best_obj))
    status = final_status if gap > tol.rel_gap else OPTIMAL
    return MilpSolution(status, float(objective), best_x, nodes=nodes_explored,
                        best_bound=float(bound), rel_gap=float(gap))
