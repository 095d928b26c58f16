"""Sensitivity-analysis harness.

Parameter sweeps rerun the full two-step procedure while varying exactly one
knob — a robustness weight, the carbon cap, or the allowance price tables —
and collect the headline quantities of each run into one table. Trend
helpers assert the expected qualitative behavior (weak monotonicity with a
small tie slack) and a regime comparison pits cap-and-trade against the
over-cap penalty alternative on a shared cap schedule.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .domain import PENALTY, ProblemInstance, Regime, SolveReport
from .formulation import FormulationOptions
from .milp import ToleranceConfig
from .procedure import ProcedureError, full_solve

#: tie slack for the weak-monotonicity trend checks
TREND_SLACK = 1e-6

ROBUST_PARAMS = ("omega", "lambda1", "lambda2")
SCALE_PARAMS = ("cap_scale", "bp_scale", "sp_scale")
PARAMETERS = ROBUST_PARAMS + SCALE_PARAMS


class SweepError(ValueError):
    """Invalid sweep specification."""


@dataclass(frozen=True)
class SweepSpec:
    """One-parameter sweep over a base instance."""

    parameter: str
    values: tuple
    instance: ProblemInstance
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.parameter not in PARAMETERS:
            raise SweepError(f"unknown sweep parameter {self.parameter!r}; "
                             f"expected one of {PARAMETERS}")
        if not self.values:
            raise SweepError("sweep value list is empty")
        for v in self.values:
            if not math.isfinite(v):
                raise SweepError(f"sweep value {v!r} is not finite")
            if self.parameter in SCALE_PARAMS and v <= -1.0:
                raise SweepError(
                    f"{self.parameter} is a multiplicative factor and must "
                    f"be > -1, got {v}")


@dataclass
class SweepRow:
    """Headline quantities of one sweep point."""

    value: float
    status: str
    z_total: float = math.nan
    z1: float = math.nan
    z2: float = math.nan
    z3: float = math.nan
    z1_star: float = math.nan
    z2_star: float = math.nan
    z3_star: float = math.nan
    total_infeasibility: float = math.nan
    buy_total: float = math.nan
    sell_total: float = math.nan
    deviation1: float = math.nan
    deviation2: float = math.nan
    #: measured at the cost stage's own optimum
    stage1_infeasibility: float = math.nan
    stage1_deviation: float = math.nan
    #: measured at the emission stage's own optimum
    stage2_deviation: float = math.nan
    arbitrage: bool = False
    buy_by_period: tuple = ()
    sell_by_period: tuple = ()
    stage_statuses: tuple = ()
    stage_seconds: tuple = ()
    error: str = ""


@dataclass
class SweepReport:
    """All rows of one sweep, in specification order."""

    parameter: str
    seed: int
    rows: list[SweepRow] = field(default_factory=list)


def apply_parameter(inst: ProblemInstance, parameter: str,
                    value: float) -> ProblemInstance:
    """Return a copy of ``inst`` with one swept parameter changed."""
    if parameter in ROBUST_PARAMS:
        return inst.with_robust(**{parameter: float(value)})
    factor = 1.0 + float(value)
    if parameter == "cap_scale":
        det = replace(inst.det, emission_cap=inst.det.emission_cap * factor)
    elif parameter == "bp_scale":
        det = replace(inst.det, buyer_offers=inst.det.buyer_offers * factor)
    elif parameter == "sp_scale":
        det = replace(inst.det, seller_offers=inst.det.seller_offers * factor)
    else:
        raise SweepError(f"unknown sweep parameter {parameter!r}")
    return replace(inst, det=det)


def _mean_abs_deviation(probs: np.ndarray, xi: np.ndarray) -> float:
    mean = float(probs @ xi)
    return float(probs @ np.abs(np.asarray(xi) - mean))


def summarize_report(inst: ProblemInstance, value: float,
                     report: SolveReport) -> SweepRow:
    probs = inst.probabilities
    depth = inst.robust.market_depth_bound
    # trades sit a cap's width below the bound, so judge totals, not periods
    full_book = depth * len(report.buy) * (1.0 - 1e-3)
    arb = (bool(np.any(report.sell_price > report.buy_price + 1e-12))
           and float(report.buy.sum()) >= full_book
           and float(report.sell.sum()) >= full_book)
    by_mode = {st.mode: st for st in report.stage_stats}
    cost_st = by_mode.get("cost_robust")
    emis_st = by_mode.get("emission_robust")
    return SweepRow(
        value=float(value), status=report.status,
        z_total=report.z_total, z1=report.z1, z2=report.z2, z3=report.z3,
        z1_star=report.z1_star, z2_star=report.z2_star,
        z3_star=report.z3_star,
        stage1_infeasibility=(cost_st.weighted_infeasibility
                              if cost_st else math.nan),
        stage1_deviation=cost_st.deviation if cost_st else math.nan,
        stage2_deviation=emis_st.deviation if emis_st else math.nan,
        total_infeasibility=report.total_infeasibility,
        buy_total=float(report.buy.sum()), sell_total=float(report.sell.sum()),
        deviation1=_mean_abs_deviation(probs, report.xi1),
        deviation2=_mean_abs_deviation(probs, report.xi2),
        arbitrage=arb,
        buy_by_period=tuple(float(v) for v in report.buy),
        sell_by_period=tuple(float(v) for v in report.sell),
        stage_statuses=tuple(st.status for st in report.stage_stats),
        stage_seconds=tuple(st.wall_seconds for st in report.stage_stats))


def _solve_point(args) -> SweepRow:
    inst, parameter, value, options, tol = args
    point = apply_parameter(inst, parameter, value)
    try:
        report = full_solve(point, options=options, tol=tol,
                            normalization_floor=1.0)
    except ProcedureError as exc:
        return SweepRow(value=float(value), status="error", error=str(exc))
    return summarize_report(point, value, report)


def sweep(spec: SweepSpec,
          options: FormulationOptions | None = None,
          tol: ToleranceConfig | None = None,
          workers: int = 1) -> SweepReport:
    """Run the full procedure at every sweep value; failures stay in-row."""
    options = options or FormulationOptions()
    tol = tol or ToleranceConfig()
    jobs = [(spec.instance, spec.parameter, v, options, tol)
            for v in spec.values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_solve_point, jobs))
    else:
        rows = [_solve_point(job) for job in jobs]
    return SweepReport(parameter=spec.parameter, seed=spec.seed, rows=rows)


def sweep_cap(spec: SweepSpec, **kwargs) -> SweepReport:
    """Cap sweep; identical engine, named for the per-period trade columns."""
    if spec.parameter != "cap_scale":
        raise SweepError("sweep_cap requires parameter 'cap_scale'")
    return sweep(spec, **kwargs)


def sweep_prices(spec: SweepSpec, **kwargs) -> SweepReport:
    """Allowance-price sweep; rows carry the arbitrage flag."""
    if spec.parameter not in ("bp_scale", "sp_scale"):
        raise SweepError("sweep_prices requires 'bp_scale' or 'sp_scale'")
    return sweep(spec, **kwargs)


# ---------------------------------------------------------------------------
# regime comparison

@dataclass
class RegimeRow:
    """Cap-and-trade vs penalty results at one cap level."""

    cap_scale: float
    ct_z_total: float = math.nan
    ct_z1: float = math.nan
    ct_z2: float = math.nan
    ct_z1_star: float = math.nan
    pen_z_total: float = math.nan
    pen_z1: float = math.nan
    pen_z2: float = math.nan
    pen_z1_star: float = math.nan
    gap: float = math.nan
    error: str = ""


@dataclass
class RegimeComparison:
    rows: list[RegimeRow] = field(default_factory=list)
    #: first cap_scale (in input order) from which |gap| stays negligible
    vanishing_cap: float | None = None


def compare_regimes(inst: ProblemInstance, cap_scales,
                    penalty_rate: float | None = None,
                    options: FormulationOptions | None = None,
                    tol: ToleranceConfig | None = None,
                    workers: int = 1) -> RegimeComparison:
    """Solve both carbon regimes on a shared cap schedule.

    ``gap`` is penalty-regime z_total minus cap-and-trade z_total; positive
    means trading helps. The vanishing cap is the first level from which the
    gap stays within 1e-4 of z_total for all remaining levels.
    """
    options = options or FormulationOptions()
    tol = tol or ToleranceConfig()
    pen_inst = replace(inst, regime=Regime(kind=PENALTY, rate=penalty_rate))
    jobs = []
    for cap in cap_scales:
        jobs.append((inst, "cap_scale", float(cap), options, tol))
        jobs.append((pen_inst, "cap_scale", float(cap), options, tol))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            solved = list(pool.map(_solve_point, jobs))
    else:
        solved = [_solve_point(job) for job in jobs]

    out = RegimeComparison()
    for idx, cap in enumerate(cap_scales):
        ct, pen = solved[2 * idx], solved[2 * idx + 1]
        row = RegimeRow(cap_scale=float(cap))
        if ct.status == "error" or pen.status == "error":
            row.error = ct.error or pen.error
        else:
            row.ct_z_total, row.ct_z1, row.ct_z2 = ct.z_total, ct.z1, ct.z2
            row.pen_z_total, row.pen_z1, row.pen_z2 = pen.z_total, pen.z1, pen.z2
            row.ct_z1_star, row.pen_z1_star = ct.z1_star, pen.z1_star
            row.gap = pen.z_total - ct.z_total
        out.rows.append(row)

    for idx, row in enumerate(out.rows):
        if row.error:
            continue
        tail = out.rows[idx:]
        if all(not r.error
               and abs(r.gap) <= 1e-4 * max(1.0, abs(r.ct_z_total))
               for r in tail):
            out.vanishing_cap = row.cap_scale
            break
    return out


# ---------------------------------------------------------------------------
# trend checks

def weakly_increasing(values, slack: float = TREND_SLACK) -> bool:
    vals = [float(v) for v in values]
    return all(b >= a - slack * (1.0 + abs(a))
               for a, b in zip(vals, vals[1:]))


def weakly_decreasing(values, slack: float = TREND_SLACK) -> bool:
    return weakly_increasing([-float(v) for v in values], slack)


def trend_checks(report: SweepReport) -> list[tuple[str, bool]]:
    """The asserted qualitative trends for each sweep parameter.

    Objective responses to a robustness weight are judged at the stressed
    stage's own optimum (where the weight enters the objective directly and
    monotonicity is an exchange-argument consequence); the combined-solution
    quantities are asserted only where the reference behavior concerns the
    compromise solution. Cap sweeps assume values listed from loose to tight
    (0 downward); z2 is reported but never asserted for cap sweeps — it has
    no expected monotone relationship with the cap.
    """
    rows = [r for r in report.rows if not r.error]
    checks: list[tuple[str, bool]] = []
    if len(rows) != len(report.rows):
        checks.append(("all points solved", False))
        return checks
    if report.parameter == "omega":
        checks.append(("infeasibility non-increasing",
                       weakly_decreasing([r.stage1_infeasibility for r in rows])))
        checks.append(("z_total non-decreasing",
                       weakly_increasing([r.z_total for r in rows])))
    elif report.parameter == "lambda1":
        checks.append(("deviation1 non-increasing",
                       weakly_decreasing([r.stage1_deviation for r in rows])))
        checks.append(("z1 non-decreasing",
                       weakly_increasing([r.z1_star for r in rows])))
    elif report.parameter == "lambda2":
        checks.append(("z2 non-decreasing",
                       weakly_increasing([r.z2_star for r in rows])))
    elif report.parameter == "cap_scale":
        checks.append(("z1 non-decreasing under cap tightening",
                       weakly_increasing([r.z1_star for r in rows])))
        checks.append(("allowance purchases non-decreasing",
                       weakly_increasing([r.buy_total for r in rows])))
        checks.append(("allowance sales non-increasing",
                       weakly_decreasing([r.sell_total for r in rows])))
    return checks


def regime_trend_checks(comparison: RegimeComparison) -> list[tuple[str, bool]]:
    rows = [r for r in comparison.rows if not r.error]
    checks = [("all points solved", len(rows) == len(comparison.rows))]
    if rows:
        checks.append(("cap-and-trade never worse",
                       all(r.gap >= -TREND_SLACK * (1.0 + abs(r.ct_z_total))
                           for r in rows)))
    return checks


# ---------------------------------------------------------------------------
# CSV output

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return "%.12g" % v
    return str(v)


def sweep_to_csv(report: SweepReport) -> str:
    """Flat CSV of a sweep; timings are excluded so reruns are identical."""
    n_periods = max((len(r.buy_by_period) for r in report.rows), default=0)
    header = ["parameter", "value", "status", "z_total", "z1", "z2", "z3",
              "z1_star", "z2_star", "z3_star",
              "total_infeasibility", "buy_total", "sell_total",
              "deviation1", "deviation2",
              "stage1_infeasibility", "stage1_deviation", "stage2_deviation",
              "arbitrage"]
    header += [f"buy_{t}" for t in range(n_periods)]
    header += [f"sell_{t}" for t in range(n_periods)]
    header += ["error"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for r in report.rows:
        buy = list(r.buy_by_period) + [math.nan] * (n_periods - len(r.buy_by_period))
        sell = list(r.sell_by_period) + [math.nan] * (n_periods - len(r.sell_by_period))
        writer.writerow(
            [report.parameter, _fmt(r.value), r.status, _fmt(r.z_total),
             _fmt(r.z1), _fmt(r.z2), _fmt(r.z3),
             _fmt(r.z1_star), _fmt(r.z2_star), _fmt(r.z3_star),
             _fmt(r.total_infeasibility),
             _fmt(r.buy_total), _fmt(r.sell_total), _fmt(r.deviation1),
             _fmt(r.deviation2), _fmt(r.stage1_infeasibility),
             _fmt(r.stage1_deviation), _fmt(r.stage2_deviation),
             _fmt(r.arbitrage)]
            + [_fmt(v) for v in buy] + [_fmt(v) for v in sell] + [r.error])
    return buf.getvalue()


def regimes_to_csv(comparison: RegimeComparison) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["cap_scale", "ct_z_total", "ct_z1", "ct_z2", "ct_z1_star",
                     "pen_z_total", "pen_z1", "pen_z2", "pen_z1_star",
                     "gap", "error"])
    for r in comparison.rows:
        writer.writerow([_fmt(r.cap_scale), _fmt(r.ct_z_total), _fmt(r.ct_z1),
                         _fmt(r.ct_z2), _fmt(r.ct_z1_star),
                         _fmt(r.pen_z_total), _fmt(r.pen_z1),
                         _fmt(r.pen_z2), _fmt(r.pen_z1_star),
                         _fmt(r.gap), r.error])
    return buf.getvalue()


def save_csv(text: str, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
