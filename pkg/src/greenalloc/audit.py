"""Independent feasibility audit of solve reports.

Recomputes every model condition directly from the instance arrays and the
report's variable values — inventory balance, carbon caps, truck-category
logic, sign and range conditions, and the deviation-slack identity — without
going through the model builder, so it can catch builder and solver defects
alike.
"""
from __future__ import annotations

import numpy as np

from .domain import PENALTY, N_ECHELONS, ProblemInstance, SolveReport


def _truck_emission(inst: ProblemInstance, q: np.ndarray, t: int) -> float:
    """Buyer-echelon transport emission in period t for one-hot q."""
    det = inst.det
    K = inst.dims.n_truck_types
    Kp = q.shape[2]
    off = Kp - K          # 1 when the synthetic zero breakpoint is present
    buyer = N_ECHELONS - 1
    total = 0.0
    for j in range(inst.dims.n_suppliers):
        for ke in range(off, Kp):
            total += (det.distance[j]
                      * det.transport_emission[j, t, ke - off, buyer]
                      * q[j, t, ke, buyer])
    return float(total)


def scenario_emission(inst: ProblemInstance, report: SolveReport, s: int) -> float:
    """Total scenario-s emission recomputed from the report's x and q."""
    det = inst.det
    sc = inst.scenarios[s]
    reman = (sc.reject_rate * sc.usable_rejected
             + sc.collect_rate * sc.reusable_collected) * det.remanufacture_emission
    total = float((report.x * det.production_emission).sum())
    total += float((report.x.sum(axis=1) * reman).sum())
    for t in range(inst.dims.n_periods):
        total += _truck_emission(inst, report.q, t)
    return total


def audit_report(inst: ProblemInstance, report: SolveReport,
                 tol: float = 1e-6) -> list[str]:
    """Check every model condition on a report; returns violation messages."""
    v: list[str] = []
    d = inst.dims
    I, J, T, S = d.n_products, d.n_suppliers, d.n_periods, d.n_scenarios
    det = inst.det
    x, r, b = report.x, report.r, report.b
    q, w = report.q, report.w
    Kp = q.shape[2]

    def nonneg(name, arr):
        if np.any(np.asarray(arr) < -tol):
            v.append(f"{name} has negative entries (min {np.min(arr):g})")

    for name in ("x", "r", "b", "buy", "sell", "delta_plus", "delta_minus",
                 "theta1", "theta2"):
        nonneg(name, getattr(report, name))
    if np.any(w < -tol) or np.any(w > 1 + tol):
        v.append("w outside [0, 1]")
    if np.any(np.abs(q - np.round(q)) > tol):
        v.append("q not integral")

    # inventory balance per (product, period, scenario)
    for s in range(S):
        sc = inst.scenarios[s]
        flow = (sc.reject_rate * sc.usable_rejected
                + sc.collect_rate * sc.reusable_collected + 1.0)
        for i in range(I):
            for t in range(T):
                lhs = (flow[i, t] * x[i, :, t].sum() + b[i, t]
                       + (r[i, t - 1] if t else 0.0)
                       + report.delta_minus[i, :, t, s].sum())
                rhs = (sc.demand[i, t] + r[i, t]
                       + (b[i, t - 1] if t else 0.0)
                       + report.delta_plus[i, :, t, s].sum())
                if abs(lhs - rhs) > tol * (1.0 + abs(rhs)):
                    v.append(f"balance ({i},{t},{s}): {lhs:g} != {rhs:g}")

    # carbon cap per (period, scenario)
    for s in range(S):
        sc = inst.scenarios[s]
        reman = (sc.reject_rate * sc.usable_rejected
                 + sc.collect_rate * sc.reusable_collected) * det.remanufacture_emission
        for t in range(T):
            emis = float((x[:, :, t] * det.production_emission[:, :, t]).sum())
            emis += float((x[:, :, t].sum(axis=1) * reman[:, t]).sum())
            emis += _truck_emission(inst, q, t)
            limit = det.emission_cap[t] + report.buy[t] - report.sell[t]
            if emis > limit + tol * (1.0 + abs(limit)):
                v.append(f"cap ({t},{s}): emission {emis:g} > {limit:g}")

    if inst.regime.kind == PENALTY and np.any(report.sell > tol):
        v.append("penalty regime must not sell allowance")

    # truck-category logic per (supplier, period, echelon)
    K = d.n_truck_types
    off = Kp - K
    bp = det.truck_breakpoints
    bp_eff = np.concatenate(([0.0], bp)) if off else bp
    for j in range(J):
        for t in range(T):
            load = float(x[:, j, t].sum())
            rep = float(sum(bp_eff[ke] * (w[j, t, ke, 0] + w[j, t, ke, 1])
                            for ke in range(Kp)))
            if abs(load - rep) > tol * (1.0 + abs(load)):
                v.append(f"load ({j},{t}): {load:g} != {rep:g}")
            for n in range(N_ECHELONS):
                if abs(q[j, t, :, n].sum() - 1.0) > tol:
                    v.append(f"q sum ({j},{t},{n}) != 1")
                if abs(w[j, t, :, n].sum() - 1.0) > tol:
                    v.append(f"w sum ({j},{t},{n}) != 1")
                if w[j, t, 0, n] > q[j, t, 0, n] + tol:
                    v.append(f"adjacency ({j},{t},0,{n})")
                for ke in range(1, Kp):
                    if w[j, t, ke, n] > q[j, t, ke, n] + q[j, t, ke - 1, n] + tol:
                        v.append(f"adjacency ({j},{t},{ke},{n})")
                if w[j, t, Kp - 1, n] > q[j, t, Kp - 2, n] + tol:
                    v.append(f"adjacency end ({j},{t},{n})")

    # deviation slacks dominate the shortfall below the mean
    for which, xi, theta in (("1", report.xi1, report.theta1),
                             ("2", report.xi2, report.theta2)):
        mean = float(inst.probabilities @ xi)
        for s in range(S):
            if xi[s] - mean + theta[s] < -tol * (1.0 + abs(mean)):
                v.append(f"theta{which}[{s}] below required deviation slack")
    return v
