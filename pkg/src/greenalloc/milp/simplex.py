"""Dense two-phase simplex for LPs with variable bounds.

Nonbasic variables rest at their lower or upper bound; upper bounds are
handled by bound flips instead of explicit rows, which keeps the tableau at
one row per structural constraint. Anti-cycling falls back to Bland's rule
after a run of degenerate pivots.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    LE, EQ, GE, MIN, MAX,
    OPTIMAL, INFEASIBLE, UNBOUNDED, NUMERICAL_FAILURE,
    MilpModel, MilpSolution, ToleranceConfig, check_solution,
)

_AT_LB = 0
_AT_UB = 1
_BASIC = 2

_PIVOT_EPS = 1e-7
_DEGENERATE_RUN = 60


@dataclass
class _CoreResult:
    status: str
    x: np.ndarray | None = None
    obj: float = math.nan
    dual_gap: float = math.nan
    iterations: int = 0


def _bounded_simplex(A, senses, b, c, ub, tol: ToleranceConfig) -> _CoreResult:
    """min c'x  s.t.  A x (senses) b,  0 <= x <= ub.  Dense two-phase core."""
    m, n = A.shape
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    senses = list(senses)

    # normalize to b >= 0 by flipping rows
    for i in range(m):
        if b[i] < 0:
            A[i] *= -1.0
            b[i] = -b[i]
            if senses[i] == LE:
                senses[i] = GE
            elif senses[i] == GE:
                senses[i] = LE

    n_slack = sum(1 for s in senses if s != EQ)
    ncols = n + n_slack + m
    T = np.zeros((m, ncols))
    T[:, :n] = A
    u = np.concatenate([ub, np.full(n_slack + m, math.inf)])

    slack_of = {}
    col = n
    for i, s in enumerate(senses):
        if s == LE:
            T[i, col] = 1.0
            slack_of[i] = col
            col += 1
        elif s == GE:
            T[i, col] = -1.0
            slack_of[i] = col
            col += 1
    art0 = n + n_slack
    for i in range(m):
        T[i, art0 + i] = 1.0

    status = np.full(ncols, _AT_LB, dtype=np.int8)
    basis = np.empty(m, dtype=np.int64)
    phase1_cost = np.zeros(ncols)
    for i, s in enumerate(senses):
        if s == LE:
            basis[i] = slack_of[i]
        else:
            basis[i] = art0 + i
            phase1_cost[art0 + i] = 1.0
    status[basis] = _BASIC
    xb = b.copy()

    enterable = np.ones(ncols, dtype=bool)
    enterable[art0:] = False        # artificials never (re-)enter

    F = T.copy()                    # pristine columns for refactorization
    b0 = b.copy()

    max_iter = 50 * (m + n) + 2000
    total_iter = 0

    def refactor(cost):
        """Rebuild tableau, basic values, and reduced costs from scratch.

        Rank-1 updates drift over long runs; refactoring restores accuracy.
        """
        nonlocal xb
        B = F[:, basis]
        T[:] = np.linalg.solve(B, F)
        at_ub = (status == _AT_UB) & np.isfinite(u) & (u > 0)
        rhs = b0 - F[:, at_ub] @ u[at_ub] if np.any(at_ub) else b0
        xb = np.linalg.solve(B, rhs)
        return cost - cost[basis] @ T

    def run_phase(cost):
        nonlocal total_iter, xb
        d = cost - cost[basis] @ T
        bland = False
        degen = 0
        dirty = 0                   # pivots since the last refactorization
        while True:
            total_iter += 1
            if total_iter > max_iter:
                return "iteration_limit", d
            if dirty >= 150:
                try:
                    d = refactor(cost)
                except np.linalg.LinAlgError:
                    return "numerical", d
                dirty = 0
            cand = enterable & (status != _BASIC)
            score = np.where(status == _AT_LB, -d, d)
            score[~cand] = -math.inf
            if bland:
                ok = np.nonzero(cand & (score > tol.optimality_tol))[0]
                if ok.size == 0:
                    if dirty:
                        try:
                            d = refactor(cost)
                        except np.linalg.LinAlgError:
                            return "numerical", d
                        dirty = 0
                        continue
                    return "optimal", d
                j = int(ok[0])
            else:
                j = int(np.argmax(score))
                if score[j] <= tol.optimality_tol:
                    if dirty:
                        try:
                            d = refactor(cost)
                        except np.linalg.LinAlgError:
                            return "numerical", d
                        dirty = 0
                        continue
                    return "optimal", d
            direction = 1.0 if status[j] == _AT_LB else -1.0
            colj = T[:, j] * direction

            ub_basis = u[basis]
            t_best = u[j]
            leave_row = -1
            leave_to = _AT_LB
            pos = colj > _PIVOT_EPS
            neg = colj < -_PIVOT_EPS
            if np.any(pos):
                ratios = xb[pos] / colj[pos]
                rows = np.nonzero(pos)[0]
                k = int(np.argmin(ratios))
                if ratios[k] < t_best - 1e-12 or (leave_row < 0 and ratios[k] <= t_best):
                    t_best = max(ratios[k], 0.0)
                    leave_row = int(rows[k])
                    leave_to = _AT_LB
            if np.any(neg):
                fin = neg & np.isfinite(ub_basis)
                if np.any(fin):
                    ratios = (xb[fin] - ub_basis[fin]) / colj[fin]
                    rows = np.nonzero(fin)[0]
                    k = int(np.argmin(ratios))
                    if ratios[k] < t_best - 1e-12 or (leave_row < 0 and ratios[k] <= t_best):
                        t_best = max(ratios[k], 0.0)
                        leave_row = int(rows[k])
                        leave_to = _AT_UB
            if leave_row < 0 and not math.isfinite(t_best):
                if dirty:
                    try:
                        d = refactor(cost)
                    except np.linalg.LinAlgError:
                        return "numerical", d
                    dirty = 0
                    continue
                return "unbounded", d

            if bland and leave_row >= 0:
                # lowest-index leaving variable among near-tied ratios
                cands = []
                for i in range(m):
                    ci = colj[i]
                    if ci > _PIVOT_EPS:
                        r = xb[i] / ci
                    elif ci < -_PIVOT_EPS and math.isfinite(ub_basis[i]):
                        r = (xb[i] - ub_basis[i]) / ci
                    else:
                        continue
                    if r <= t_best + 1e-9:
                        cands.append(i)
                if cands:
                    leave_row = min(cands, key=lambda i: basis[i])
                    ci = colj[leave_row]
                    leave_to = _AT_LB if ci > 0 else _AT_UB

            if leave_row < 0 or (math.isfinite(u[j]) and u[j] < t_best - 1e-12):
                # bound flip, no basis change
                step = u[j]
                xb -= step * colj
                status[j] = _AT_UB if status[j] == _AT_LB else _AT_LB
                degen = 0
                dirty += 1
                continue

            step = t_best
            if step <= 1e-11:
                degen += 1
                if degen > _DEGENERATE_RUN:
                    bland = True
            else:
                degen = 0
                bland = False

            piv = T[leave_row, j]
            if abs(piv) < _PIVOT_EPS:
                return "numerical", d
            xb -= step * colj
            entering_value = step if direction > 0 else u[j] - step
            leaving = basis[leave_row]
            status[leaving] = leave_to

            T[leave_row] /= piv
            dj = d[j]
            if dj != 0.0:
                d -= dj * T[leave_row]
            colv = T[:, j].copy()
            colv[leave_row] = 0.0
            nz = np.abs(colv) > 1e-13
            if np.any(nz):
                T[nz] -= np.outer(colv[nz], T[leave_row])
            basis[leave_row] = j
            status[j] = _BASIC
            xb[leave_row] = entering_value
            dirty += 1
        # unreachable

    # ---- phase 1 ----
    if np.any(phase1_cost):
        ph_status, _ = run_phase(phase1_cost)
        if ph_status in ("numerical", "iteration_limit"):
            return _CoreResult(NUMERICAL_FAILURE, iterations=total_iter)
        obj1 = float(np.sum(xb[np.isin(basis, np.arange(art0, ncols))]))
        scale = 1.0 + float(np.max(np.abs(b))) if m else 1.0
        if obj1 > tol.feasibility_tol * scale:
            return _CoreResult(INFEASIBLE, iterations=total_iter)
        # drive basic artificials out where possible
        for i in range(m):
            if basis[i] >= art0:
                row = T[i, :art0]
                js = np.nonzero((np.abs(row) > 1e-7) & (status[:art0] != _BASIC))[0]
                if js.size == 0:
                    continue    # redundant row: artificial stays basic at 0
                j = int(js[0])
                piv = T[i, j]
                entering_value = 0.0 if status[j] == _AT_LB else u[j]
                status[basis[i]] = _AT_LB
                T[i] /= piv
                colv = T[:, j].copy()
                colv[i] = 0.0
                nz = np.abs(colv) > 1e-13
                if np.any(nz):
                    T[nz] -= np.outer(colv[nz], T[i])
                basis[i] = j
                status[j] = _BASIC
                xb[i] = entering_value
    u[art0:] = 0.0

    # ---- phase 2 ----
    cost2 = np.zeros(ncols)
    cost2[:n] = c
    ph_status, d = run_phase(cost2)
    if ph_status in ("numerical", "iteration_limit"):
        return _CoreResult(NUMERICAL_FAILURE, iterations=total_iter)
    if ph_status == "unbounded":
        return _CoreResult(UNBOUNDED, iterations=total_iter)

    values = np.where((status == _AT_UB) & np.isfinite(u), u, 0.0)
    values[basis] = xb
    x = values[:n]
    obj = float(cost2[:n] @ x)

    # weak duality certificate from the final basis
    binv = T[:, art0:]
    y = cost2[basis] @ binv
    at_ub = (status[:n] == _AT_UB) & np.isfinite(u[:n])
    dual_obj = float(y @ b + d[:n][at_ub] @ u[:n][at_ub])
    dual_gap = abs(obj - dual_obj) / (1.0 + abs(obj))
    return _CoreResult(OPTIMAL, x=x, obj=obj, dual_gap=dual_gap, iterations=total_iter)


def _equilibrate(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Iterative geometric row/column scaling, rounded to powers of two.

    Brings all matrix entries toward unit magnitude, which keeps simplex
    pivots well-conditioned on badly scaled models; power-of-two factors
    make the rescaling exact in floating point.
    """
    m, n = A.shape
    R = np.ones(m)
    C = np.ones(n)
    if A.size == 0:
        return R, C
    M = np.abs(np.array(A))
    for _ in range(4):
        for axis, scale in ((1, R), (0, C)):
            mx = M.max(axis=axis)
            mn = np.where(M > 0, M, np.inf).min(axis=axis)
            with np.errstate(divide="ignore", invalid="ignore"):
                f = 1.0 / np.sqrt(mx * mn)
            f[~np.isfinite(f) | (f <= 0)] = 1.0
            f = np.exp2(np.round(np.log2(f)))
            scale *= f
            M *= f[:, None] if axis == 1 else f[None, :]
    return R, C


class _Standardized:
    """Dense constraint data for one model, reusable across bound changes."""

    def __init__(self, model: MilpModel):
        self.model = model
        m = len(model.constraints)
        n = model.n_vars
        self.A = np.zeros((m, n))
        self.b = np.zeros(m)
        self.senses = []
        for i, con in enumerate(model.constraints):
            for vid, coef in con.coeffs.items():
                self.A[i, vid] += coef
            self.b[i] = con.rhs
            self.senses.append(con.sense)
        self.c = model.objective_vector()
        self.minimize = model.sense == MIN
        if not self.minimize:
            self.c = -self.c
        self.row_scale, self.col_scale = _equilibrate(self.A)

    def solve(self, lb: np.ndarray, ub: np.ndarray, tol: ToleranceConfig) -> MilpSolution:
        """Solve the LP relaxation with the given variable bounds."""
        n = self.A.shape[1]
        if np.any(lb > ub + 1e-12):
            return MilpSolution(INFEASIBLE, math.nan, np.array([]))

        # shift finite lower bounds to zero; reflect ub-only vars; split free vars
        shift = np.where(np.isfinite(lb), lb, 0.0)
        reflect = ~np.isfinite(lb) & np.isfinite(ub)
        free = ~np.isfinite(lb) & ~np.isfinite(ub)

        A = self.A.copy()
        c = self.c.copy()
        const = float(self.c @ shift)
        bb = self.b - self.A @ shift
        u = np.where(np.isfinite(lb), ub - lb, math.inf)

        if np.any(reflect):
            idx = np.nonzero(reflect)[0]
            const += float(self.c[idx] @ ub[idx])
            bb = bb - self.A[:, idx] @ ub[idx]
            A[:, idx] *= -1.0
            c[idx] = -c[idx]
            u[idx] = math.inf
        free_idx = np.nonzero(free)[0]
        if free_idx.size:
            A = np.hstack([A, -self.A[:, free_idx]])
            c = np.concatenate([c, -self.c[free_idx]])
            u = np.concatenate([u, np.full(free_idx.size, math.inf)])

        scale = np.concatenate([self.col_scale, self.col_scale[free_idx]])
        A = A * self.row_scale[:, None] * scale[None, :]
        bb = bb * self.row_scale
        c = c * scale
        u = u / scale
        # normalize the cost vector so reduced-cost tolerances act relative
        # to the largest coefficient, not in absolute units
        cmax = float(np.max(np.abs(c))) if c.size else 0.0
        if cmax > 0.0:
            c = c / cmax
        res = _bounded_simplex(A, self.senses, bb, c, u, tol)
        if res.status != OPTIMAL:
            return MilpSolution(res.status, math.nan, np.array([]))
        if cmax > 0.0:
            res.obj *= cmax

        xs = res.x * scale
        y = xs[:n].copy()
        if free_idx.size:
            y[free_idx] -= xs[n:]
        x = y + shift
        if np.any(reflect):
            idx = np.nonzero(reflect)[0]
            x[idx] = ub[idx] - y[idx]
        obj = res.obj + const
        if res.dual_gap > max(1e-6, tol.optimality_tol * 100):
            return MilpSolution(NUMERICAL_FAILURE, math.nan, np.array([]))
        if not self.minimize:
            obj = -obj
        return MilpSolution(OPTIMAL, float(obj), x)


def solve_lp(model: MilpModel, tol: ToleranceConfig | None = None) -> MilpSolution:
    """Solve the continuous relaxation of ``model`` (binaries become [0, 1])."""
    tol = tol or ToleranceConfig()
    std = _Standardized(model)
    sol = std.solve(model.lower_bounds(), model.upper_bounds(), tol)
    if sol.status == OPTIMAL:
        sol.objective += model.objective_const
        bad = check_solution(model, sol.values, tol=max(1e-6, tol.feasibility_tol * 10))
        # integrality is not enforced at the LP level
        bad = [msg for msg in bad if "not integral" not in msg]
        if bad:
            return MilpSolution(NUMERICAL_FAILURE, math.nan, np.array([]))
        sol.best_bound = sol.objective
        sol.rel_gap = 0.0
    return sol
