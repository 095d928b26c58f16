"""Two-step solution procedure.

Step one solves the three objectives independently (cost, emission, quality)
with the full constraint set; step two minimizes the total normalized
deviation from the three reference optima. Absolute values of the reference
optima are used as denominators so the deviation terms stay non-negative
even when the best cost is a net profit; for positive optima this is
identical to dividing by the optimum itself.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict

import numpy as np

from .domain import ProblemInstance, SolveReport, StageStats
from .formulation import (
    MODE_COMBINED, MODE_COST, MODE_EMISSION, MODE_QUALITY,
    FormulationOptions, build_full_model, make_repair_callback,
)
from .milp import (
    GAP_LIMIT, INFEASIBLE, OPTIMAL, UNBOUNDED,
    MilpSolution, ToleranceConfig, solve_milp,
)


class ProcedureError(RuntimeError):
    """A stage of the two-step procedure failed.

    ``status`` carries the solver status that triggered the failure (or
    ``None`` for logic errors), so frontends can map it to exit codes.
    """

    def __init__(self, message: str, status: str | None = None):
        super().__init__(message)
        self.status = status


class NormalizationError(ProcedureError):
    """A reference optimum is (near) zero, so Eq-style normalization breaks."""


_WHICH_TO_MODE = {1: MODE_COST, 2: MODE_EMISSION, 3: MODE_QUALITY}


def _solve_stage(inst: ProblemInstance, mode: str,
                 options: FormulationOptions, tol: ToleranceConfig,
                 zstars=None) -> tuple[MilpSolution, object, object, StageStats]:
    model, vm = build_full_model(inst, mode, options, zstars)
    callback = make_repair_callback(inst, vm, model, options)
    start = time.perf_counter()
    sol = solve_milp(model, tol, incumbent_callback=callback)
    stats = StageStats(mode=mode, status=sol.status, nodes=sol.nodes,
                       best_bound=sol.best_bound, rel_gap=sol.rel_gap,
                       wall_seconds=time.perf_counter() - start)
    if sol.values.size:
        probs = inst.probabilities
        stats.objective = float(sol.objective)
        stats.weighted_infeasibility = float(sum(
            probs[s] * (sol.values[vm.dplus[..., s]].sum()
                        + sol.values[vm.dminus[..., s]].sum())
            for s in range(len(probs))))
        zeta = {MODE_COST: vm.zeta1, MODE_EMISSION: vm.zeta2}.get(mode)
        if zeta is not None:
            xi = sol.values[zeta]
            mean = float(probs @ xi)
            stats.deviation = float(probs @ np.abs(xi - mean))
    if sol.status == INFEASIBLE:
        raise ProcedureError(f"{mode} model is infeasible for this instance",
                             status=INFEASIBLE)
    if sol.status == UNBOUNDED:
        raise ProcedureError(
            f"{mode} model is unbounded despite the boundedness guards; "
            "review the guard configuration", status=UNBOUNDED)
    if sol.status not in (OPTIMAL, GAP_LIMIT):
        raise ProcedureError(f"{mode} solve failed with status {sol.status}",
                             status=sol.status)
    return sol, model, vm, stats


def solve_individual(inst: ProblemInstance, which: int,
                     options: FormulationOptions | None = None,
                     tol: ToleranceConfig | None = None,
                     ) -> tuple[float, MilpSolution, StageStats]:
    """Optimize one objective alone; returns (optimum, solution, stats)."""
    if which not in _WHICH_TO_MODE:
        raise ProcedureError(f"objective selector must be 1, 2, or 3, got {which}")
    options = options or FormulationOptions()
    tol = tol or ToleranceConfig()
    sol, _, _, stats = _solve_stage(inst, _WHICH_TO_MODE[which], options, tol)
    return float(sol.objective), sol, stats


def evaluate_objectives(inst: ProblemInstance,
                        report: SolveReport) -> tuple[float, float, float]:
    """Recompute z1, z2, z3 directly from a report's variable values."""
    probs = inst.probabilities
    rb = inst.robust

    def robust_value(xi, theta, lam):
        mean = float(probs @ xi)
        dev = float(sum(probs[s] * ((xi[s] - mean) + 2.0 * theta[s])
                        for s in range(len(probs))))
        pen = float(sum(probs[s] * (report.delta_plus[..., s].sum()
                                    + report.delta_minus[..., s].sum())
                        for s in range(len(probs))))
        return mean + lam * dev + rb.omega * pen

    z1 = robust_value(report.xi1, report.theta1, rb.lambda1)
    z2 = robust_value(report.xi2, report.theta2, rb.lambda2)
    det = inst.det
    score = (det.score_env_mgmt + det.score_green_product
             + det.score_recyclability + det.score_toxicity)
    z3 = float((score * report.x).sum())
    return z1, z2, z3


def _normalizers(zstars, floor):
    out = []
    for name, z in zip(("z1*", "z2*", "z3*"), zstars):
        if not math.isfinite(z):
            raise NormalizationError(f"{name} is not finite")
        denom = abs(z)
        if denom < 1e-9:
            if floor is None:
                raise NormalizationError(
                    f"{name} is (near) zero; the normalized deviation is "
                    "undefined — shift the objective affinely or supply a "
                    "normalization floor")
            denom = floor
        out.append(denom)
    return out


def _extract_report(inst: ProblemInstance, vm, sol: MilpSolution,
                    zstars, z_values, z_total, stage_stats,
                    overrides=None) -> SolveReport:
    vals = sol.values
    return SolveReport(
        z1_star=float(zstars[0]), z2_star=float(zstars[1]),
        z3_star=float(zstars[2]),
        z1=float(z_values[0]), z2=float(z_values[1]), z3=float(z_values[2]),
        z_total=float(z_total),
        x=vals[vm.x], r=vals[vm.r], b=vals[vm.b],
        buy=vals[vm.buy], sell=vals[vm.sell],
        sell_price=np.array(vm.sell_price), buy_price=np.array(vm.buy_price),
        q=vals[vm.q], w=vals[vm.w],
        delta_plus=vals[vm.dplus], delta_minus=vals[vm.dminus],
        theta1=vals[vm.theta1], theta2=vals[vm.theta2],
        xi1=vals[vm.zeta1], xi2=vals[vm.zeta2],
        status=sol.status, regime=inst.regime.kind,
        overrides=dict(overrides or {}), stage_stats=list(stage_stats))


def solve_combined(inst: ProblemInstance, z1_star: float, z2_star: float,
                   z3_star: float,
                   options: FormulationOptions | None = None,
                   tol: ToleranceConfig | None = None,
                   stage_bounds: tuple[float, float, float] | None = None,
                   normalization_floor: float | None = None,
                   stage_stats=(),
                   ) -> SolveReport:
    """Step two: minimize the total normalized deviation from the optima.

    ``stage_bounds`` may carry the proven bounds of the individual solves;
    the sandwich verification (z1 >= z1*, z2 >= z2*, z3 <= z3*) is then run
    against those bounds, which stays sound when step one stopped at a
    positive gap.
    """
    options = options or FormulationOptions()
    tol = tol or ToleranceConfig()
    zstars = (float(z1_star), float(z2_star), float(z3_star))
    denoms = _normalizers(zstars, normalization_floor)

    # the model normalizes by |z*|; substitute the floor for degenerate stars
    model_stars = tuple(math.copysign(dn, z) if abs(z) >= 1e-9 else dn
                        for z, dn in zip(zstars, denoms))
    sol, _, vm, stats = _solve_stage(inst, MODE_COMBINED, options, tol,
                                     zstars=model_stars)

    report = _extract_report(inst, vm, sol, zstars, (0, 0, 0), 0.0,
                             list(stage_stats) + [stats])
    z1, z2, z3 = evaluate_objectives(inst, report)
    z_total = ((z1 - zstars[0]) / denoms[0] + (z2 - zstars[1]) / denoms[1]
               + (zstars[2] - z3) / denoms[2])
    report.z1, report.z2, report.z3 = z1, z2, z3
    report.z_total = float(z_total)
    if normalization_floor is not None and any(abs(z) < 1e-9 for z in zstars):
        report.overrides["normalization_floor"] = normalization_floor

    ref = stage_bounds or zstars
    slack = max(1e-6, tol.rel_gap)
    checks = ((z1, ref[0], 1), (z2, ref[1], 1), (z3, ref[2], -1))
    for value, bound, sign in checks:
        if sign * (value - bound) < -slack * (1.0 + abs(bound)):
            raise ProcedureError(
                "combined solution violates the reference optimum sandwich: "
                f"value {value:g} vs reference {bound:g}")
    return report


def full_solve(inst: ProblemInstance,
               options: FormulationOptions | None = None,
               tol: ToleranceConfig | None = None,
               normalization_floor: float | None = None) -> SolveReport:
    """Run the complete two-step procedure on one instance."""
    options = options or FormulationOptions()
    tol = tol or ToleranceConfig()
    stars, bounds, stats = [], [], []
    for which in (1, 2, 3):
        z, sol, st = solve_individual(inst, which, options, tol)
        stars.append(z)
        bounds.append(sol.best_bound)
        stats.append(st)
    return solve_combined(inst, *stars, options=options, tol=tol,
                          stage_bounds=tuple(bounds),
                          normalization_floor=normalization_floor,
                          stage_stats=stats)


# ---------------------------------------------------------------------------
# report serialization

def report_to_dict(report: SolveReport) -> dict:
    """Structured form of a report; timing statistics are deliberately
    excluded so identical runs serialize byte-identically."""
    out = {}
    for name in ("z1_star", "z2_star", "z3_star", "z1", "z2", "z3", "z_total"):
        out[name] = getattr(report, name)
    for name in ("x", "r", "b", "buy", "sell", "sell_price", "buy_price",
                 "q", "w", "delta_plus", "delta_minus", "theta1", "theta2",
                 "xi1", "xi2"):
        out[name] = np.asarray(getattr(report, name)).tolist()
    out["status"] = report.status
    out["regime"] = report.regime
    out["overrides"] = dict(report.overrides)
    out["stage_stats"] = [
        {k: v for k, v in asdict(st).items() if k != "wall_seconds"}
        for st in report.stage_stats]
    return out


def save_report(report: SolveReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report), fh, indent=1, sort_keys=True)
        fh.write("\n")


def report_to_csv(report: SolveReport) -> str:
    """Flat CSV: one row per variable-family entry."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["family", "i", "j", "t", "k", "n", "s", "value"])
    axis_names = {"i": 0, "j": 1, "t": 2, "k": 3, "n": 4, "s": 5}
    layouts = {
        "x": ("ijt", report.x), "r": ("it", report.r), "b": ("it", report.b),
        "buy": ("t", report.buy), "sell": ("t", report.sell),
        "sell_price": ("t", report.sell_price),
        "buy_price": ("t", report.buy_price),
        "q": ("jtkn", report.q), "w": ("jtkn", report.w),
        "delta_plus": ("ijts", report.delta_plus),
        "delta_minus": ("ijts", report.delta_minus),
        "theta1": ("s", report.theta1), "theta2": ("s", report.theta2),
        "xi1": ("s", report.xi1), "xi2": ("s", report.xi2),
    }
    for family, (axes, arr) in layouts.items():
        arr = np.asarray(arr)
        for idx in np.ndindex(*arr.shape):
            cells = [""] * 6
            for axis, pos in zip(axes, idx):
                cells[axis_names[axis]] = pos
            writer.writerow([family] + cells + ["%.12g" % arr[idx]])
    for name in ("z1_star", "z2_star", "z3_star", "z1", "z2", "z3", "z_total"):
        writer.writerow([name, "", "", "", "", "", "", "%.12g" % getattr(report, name)])
    return buf.getvalue()


def save_report_csv(report: SolveReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(report_to_csv(report))
