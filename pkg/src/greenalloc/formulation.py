"""Compilation of a ProblemInstance into the robust multi-objective MILP.

Builds per-scenario cost and emission expressions, the deterministic quality
expression, the robust (mean + weighted deviation + infeasibility penalty)
objectives, and the full constraint set: per-scenario carbon cap rows,
inventory balance rows, and the piecewise truck-category blocks.

Sign conventions. The carbon trade terms are implemented in the one
internally consistent form: ``buy`` expands the cap and adds cost at the
best buying price (the lowest seller offer); ``sell`` shrinks the cap and
earns revenue at the best selling price (the highest buyer offer).

Echelon handling. The truck blocks (adjacency, one selected category, unit
weight sum) are stated per echelon. The load equation ties the total order
of a supplier to the double echelon sum of breakpoint weights; with
``echelon_exclusive`` (default) an extra row forces at least one echelon of
every (supplier, period) pair onto the synthetic zero segment, so one
echelon carries the order while the other stays (nearly) idle.

Boundedness guards. The quality-only solve is unbounded without extra
bounds, so deviation variables are capped by worst-scenario demand,
inventory and backorder by cumulative worst-case demand, and trade volumes
by the market depth bound. All guards are generous enough to leave
realistic optima interior.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import CAP_AND_TRADE, PENALTY, N_ECHELONS, ProblemInstance
from .instance import derive_trade_prices
from .milp import EQ, GE, LE, MAX, MIN, BINARY, MilpModel

MODE_COST = "cost_robust"
MODE_EMISSION = "emission_robust"
MODE_QUALITY = "quality"
MODE_COMBINED = "combined"
MODES = (MODE_COST, MODE_EMISSION, MODE_QUALITY, MODE_COMBINED)


class FormulationError(ValueError):
    """Invalid formulation request (bad mode, missing reference optima, ...)."""


@dataclass(frozen=True)
class FormulationOptions:
    """Fidelity switches for the two documented model ambiguities.

    zero_breakpoint: prepend a synthetic load breakpoint at 0 so a supplier
        may receive no order in a period (default on; off reproduces the
        literal constraint set, under which every supplier must be ordered
        from in every period).
    echelon_exclusive: add the per-(supplier, period) row that pins at least
        one echelon to the zero segment (default on; requires the zero
        breakpoint).
    """

    zero_breakpoint: bool = True
    echelon_exclusive: bool = True

    def __post_init__(self):
        if self.echelon_exclusive and not self.zero_breakpoint:
            raise FormulationError(
                "echelon_exclusive requires zero_breakpoint")


@dataclass
class VariableMap:
    """Model variable ids for every decision variable family.

    All arrays hold integer variable ids, shaped by the canonical index
    order; ``breakpoints`` is the effective breakpoint vector (with the
    synthetic zero prepended when enabled).
    """

    x: np.ndarray        # (I, J, T) order quantities
    r: np.ndarray        # (I, T) end-of-period inventory
    b: np.ndarray        # (I, T) end-of-period backorder
    buy: np.ndarray      # (T,) allowance bought (penalty regime: excess)
    sell: np.ndarray     # (T,) allowance sold
    q: np.ndarray        # (J, T, K', 2) binary category selectors
    w: np.ndarray        # (J, T, K', 2) breakpoint weights
    dplus: np.ndarray    # (I, J, T, S) under-fulfillment
    dminus: np.ndarray   # (I, J, T, S) over-fulfillment
    theta1: np.ndarray   # (S,) cost deviation slack
    theta2: np.ndarray   # (S,) emission deviation slack
    zeta1: np.ndarray    # (S,) free scalars holding per-scenario cost
    zeta2: np.ndarray    # (S,) free scalars holding per-scenario emission
    breakpoints: np.ndarray  # (K',) effective load breakpoints
    sell_price: np.ndarray   # (T,) derived trade prices
    buy_price: np.ndarray    # (T,)
    theta_rows_added: set = field(default_factory=set)


def effective_breakpoints(inst: ProblemInstance,
                          options: FormulationOptions) -> np.ndarray:
    bp = np.asarray(inst.det.truck_breakpoints, dtype=float)
    if options.zero_breakpoint:
        bp = np.concatenate(([0.0], bp))
    return bp


def build_variables(model: MilpModel, inst: ProblemInstance,
                    options: FormulationOptions) -> VariableMap:
    d = inst.dims
    I, J, T, S = d.n_products, d.n_suppliers, d.n_periods, d.n_scenarios
    bp = effective_breakpoints(inst, options)
    Kp = bp.size
    depth = inst.robust.market_depth_bound
    sell_price, buy_price = derive_trade_prices(inst)

    max_demand = np.max(np.stack([sc.demand for sc in inst.scenarios]), axis=0)
    cum_demand = np.cumsum(max_demand, axis=1)

    def grid(shape, namer, **kw):
        ids = np.empty(shape, dtype=np.int64)
        for idx in np.ndindex(*shape):
            bounds = {k: (v(idx) if callable(v) else v) for k, v in kw.items()}
            ids[idx] = model.add_var(namer(idx), **bounds)
        return ids

    x = grid((I, J, T), lambda ix: "x_%d_%d_%d" % ix)
    r = grid((I, T), lambda ix: "r_%d_%d" % ix, ub=lambda ix: float(cum_demand[ix]))
    b = grid((I, T), lambda ix: "b_%d_%d" % ix, ub=lambda ix: float(cum_demand[ix]))
    buy = grid((T,), lambda ix: "buy_%d" % ix, ub=depth)
    sell_ub = 0.0 if inst.regime.kind == PENALTY else depth
    sell = grid((T,), lambda ix: "sell_%d" % ix, ub=sell_ub)
    q = grid((J, T, Kp, N_ECHELONS), lambda ix: "q_%d_%d_%d_%d" % ix, kind=BINARY)
    w = grid((J, T, Kp, N_ECHELONS), lambda ix: "w_%d_%d_%d_%d" % ix, ub=1.0)
    dplus = grid((I, J, T, S), lambda ix: "dp_%d_%d_%d_%d" % ix,
                 ub=lambda ix: float(max_demand[ix[0], ix[2]]))
    dminus = grid((I, J, T, S), lambda ix: "dm_%d_%d_%d_%d" % ix,
                  ub=lambda ix: float(max_demand[ix[0], ix[2]]))
    theta1 = grid((S,), lambda ix: "th1_%d" % ix)
    theta2 = grid((S,), lambda ix: "th2_%d" % ix)
    zeta1 = grid((S,), lambda ix: "z1_%d" % ix, lb=-math.inf)
    zeta2 = grid((S,), lambda ix: "z2_%d" % ix, lb=-math.inf)

    return VariableMap(x=x, r=r, b=b, buy=buy, sell=sell, q=q, w=w,
                       dplus=dplus, dminus=dminus, theta1=theta1,
                       theta2=theta2, zeta1=zeta1, zeta2=zeta2,
                       breakpoints=bp, sell_price=sell_price,
                       buy_price=buy_price)


def _original_k(k_eff: int, options: FormulationOptions) -> int | None:
    """Map an effective breakpoint index to the data index (None = synthetic)."""
    if options.zero_breakpoint:
        return None if k_eff == 0 else k_eff - 1
    return k_eff


def _x_cost_rates(inst: ProblemInstance, s: int) -> np.ndarray:
    """Per-unit order cost under scenario s, shaped (I, J, T)."""
    det = inst.det
    sc = inst.scenarios[s]
    e, p = sc.reject_rate, sc.collect_rate
    u, v = sc.usable_rejected, sc.reusable_collected
    per_it = ((e + p) * det.disassembly_cost
              + (e * u + p * v) * det.remanufacture_cost
              + (e * (1 - u) + p * (1 - v)) * det.disposal_cost)
    return (sc.delay_days[None, :, :] * det.delay_penalty
            + e[:, None, :] * det.reject_loss
            + sc.purchase_cost
            + per_it[:, None, :] * np.ones((1, inst.dims.n_suppliers, 1)))


def build_scenario_cost(inst: ProblemInstance, s: int, vm: VariableMap,
                        options: FormulationOptions | None = None) -> dict[int, float]:
    """Scenario-s total cost expression as a sparse coefficient map."""
    options = options or FormulationOptions()
    det = inst.det
    coeffs: dict[int, float] = {}
    rates = _x_cost_rates(inst, s)
    for idx in np.ndindex(*vm.x.shape):
        coeffs[int(vm.x[idx])] = float(rates[idx])
    for idx in np.ndindex(*vm.r.shape):
        coeffs[int(vm.r[idx])] = float(det.holding_cost[idx])
        coeffs[int(vm.b[idx])] = float(det.backorder_cost[idx])
    J, T, Kp, _ = vm.q.shape
    for j in range(J):
        for t in range(T):
            for ke in range(Kp):
                k = _original_k(ke, options)
                if k is None:
                    continue
                for n in range(N_ECHELONS):
                    coeffs[int(vm.q[j, t, ke, n])] = float(det.transport_cost[j, t, k, n])
    rate = _penalty_rates(inst, vm)
    for t in range(T):
        if inst.regime.kind == PENALTY:
            coeffs[int(vm.buy[t])] = float(rate[t])
        else:
            coeffs[int(vm.buy[t])] = float(vm.buy_price[t])
            coeffs[int(vm.sell[t])] = -float(vm.sell_price[t])
    return coeffs


def _penalty_rates(inst: ProblemInstance, vm: VariableMap) -> np.ndarray:
    if inst.regime.kind == PENALTY and inst.regime.rate is not None:
        return np.full(inst.dims.n_periods, float(inst.regime.rate))
    return vm.buy_price


def build_scenario_emission(inst: ProblemInstance, s: int, vm: VariableMap,
                            options: FormulationOptions | None = None) -> dict[int, float]:
    """Scenario-s carbon emission expression as a sparse coefficient map."""
    options = options or FormulationOptions()
    det = inst.det
    sc = inst.scenarios[s]
    coeffs: dict[int, float] = {}
    reman = (sc.reject_rate * sc.usable_rejected
             + sc.collect_rate * sc.reusable_collected) * det.remanufacture_emission
    rates = det.production_emission + reman[:, None, :]
    for idx in np.ndindex(*vm.x.shape):
        coeffs[int(vm.x[idx])] = float(rates[idx])
    J, T, Kp, _ = vm.q.shape
    buyer = N_ECHELONS - 1   # only the buyer-echelon trucks emit in this measure
    for j in range(J):
        for t in range(T):
            for ke in range(Kp):
                k = _original_k(ke, options)
                if k is None:
                    continue
                coeffs[int(vm.q[j, t, ke, buyer])] = float(
                    det.distance[j] * det.transport_emission[j, t, k, buyer])
    return coeffs


def build_quality(inst: ProblemInstance, vm: VariableMap) -> dict[int, float]:
    """Deterministic qualitative-score expression as a sparse coefficient map."""
    det = inst.det
    score = (det.score_env_mgmt + det.score_green_product
             + det.score_recyclability + det.score_toxicity)
    return {int(vm.x[idx]): float(score[idx]) for idx in np.ndindex(*vm.x.shape)}


def add_core_constraints(inst: ProblemInstance, vm: VariableMap,
                         model: MilpModel,
                         options: FormulationOptions | None = None) -> None:
    """Add cap, inventory-balance, and truck-category rows."""
    options = options or FormulationOptions()
    d = inst.dims
    I, J, T, S = d.n_products, d.n_suppliers, d.n_periods, d.n_scenarios
    Kp = vm.breakpoints.size
    det = inst.det

    # carbon cap per (period, scenario): emission <= CAP + buy - sell
    for s in range(S):
        sc = inst.scenarios[s]
        reman = (sc.reject_rate * sc.usable_rejected
                 + sc.collect_rate * sc.reusable_collected) * det.remanufacture_emission
        for t in range(T):
            row: dict[int, float] = {}
            for i in range(I):
                for j in range(J):
                    row[int(vm.x[i, j, t])] = float(
                        det.production_emission[i, j, t] + reman[i, t])
            buyer = N_ECHELONS - 1
            for j in range(J):
                for ke in range(Kp):
                    k = _original_k(ke, options)
                    if k is None:
                        continue
                    row[int(vm.q[j, t, ke, buyer])] = float(
                        det.distance[j] * det.transport_emission[j, t, k, buyer])
            row[int(vm.buy[t])] = -1.0
            row[int(vm.sell[t])] = 1.0
            model.add_constraint(f"cap_{t}_{s}", row, LE, float(det.emission_cap[t]))

    # inventory balance per (product, period, scenario)
    for s in range(S):
        sc = inst.scenarios[s]
        flow = (sc.reject_rate * sc.usable_rejected
                + sc.collect_rate * sc.reusable_collected + 1.0)   # (I, T)
        for i in range(I):
            for t in range(T):
                row = {}
                for j in range(J):
                    row[int(vm.x[i, j, t])] = float(flow[i, t])
                    row[int(vm.dminus[i, j, t, s])] = 1.0
                    row[int(vm.dplus[i, j, t, s])] = -1.0
                row[int(vm.b[i, t])] = 1.0
                row[int(vm.r[i, t])] = -1.0
                if t > 0:
                    row[int(vm.r[i, t - 1])] = 1.0
                    row[int(vm.b[i, t - 1])] = -1.0
                model.add_constraint(f"bal_{i}_{t}_{s}", row, EQ,
                                     float(sc.demand[i, t]))

    # truck categories: load ties to the double echelon sum of weights
    for j in range(J):
        for t in range(T):
            row = {int(vm.x[i, j, t]): 1.0 for i in range(I)}
            for n in range(N_ECHELONS):
                for ke in range(Kp):
                    row[int(vm.w[j, t, ke, n])] = -float(vm.breakpoints[ke])
            model.add_constraint(f"load_{j}_{t}", row, EQ, 0.0)
            for n in range(N_ECHELONS):
                model.add_constraint(
                    f"adj_{j}_{t}_0_{n}",
                    {int(vm.w[j, t, 0, n]): 1.0, int(vm.q[j, t, 0, n]): -1.0},
                    LE, 0.0)
                for ke in range(1, Kp):
                    model.add_constraint(
                        f"adj_{j}_{t}_{ke}_{n}",
                        {int(vm.w[j, t, ke, n]): 1.0,
                         int(vm.q[j, t, ke, n]): -1.0,
                         int(vm.q[j, t, ke - 1, n]): -1.0},
                        LE, 0.0)
                model.add_constraint(
                    f"adjend_{j}_{t}_{n}",
                    {int(vm.w[j, t, Kp - 1, n]): 1.0,
                     int(vm.q[j, t, Kp - 2, n]): -1.0},
                    LE, 0.0)
                model.add_constraint(
                    f"selq_{j}_{t}_{n}",
                    {int(vm.q[j, t, ke, n]): 1.0 for ke in range(Kp)}, EQ, 1.0)
                model.add_constraint(
                    f"selw_{j}_{t}_{n}",
                    {int(vm.w[j, t, ke, n]): 1.0 for ke in range(Kp)}, EQ, 1.0)
            if options.echelon_exclusive:
                model.add_constraint(
                    f"excl_{j}_{t}",
                    {int(vm.q[j, t, 0, n]): 1.0 for n in range(N_ECHELONS)},
                    GE, 1.0)
                # valid inequality: with one echelon pinned to the zero
                # segment the supplier load cannot exceed the largest
                # breakpoint plus the first one; stating it explicitly
                # tightens the LP relaxation substantially
                model.add_constraint(
                    f"loadcap_{j}_{t}",
                    {int(vm.x[i, j, t]): 1.0 for i in range(I)},
                    LE, float(vm.breakpoints[-1] + vm.breakpoints[1]))


def link_scenario_values(inst: ProblemInstance, vm: VariableMap,
                         model: MilpModel,
                         options: FormulationOptions | None = None) -> None:
    """Tie the free per-scenario scalars to the cost/emission expressions."""
    options = options or FormulationOptions()
    for s in range(inst.dims.n_scenarios):
        for tag, zeta, builder in (("zl1", vm.zeta1, build_scenario_cost),
                                   ("zl2", vm.zeta2, build_scenario_emission)):
            row = {vid: -coef for vid, coef in builder(inst, s, vm, options).items()}
            row[int(zeta[s])] = 1.0
            model.add_constraint(f"{tag}_{s}", row, EQ, 0.0)


def _add_theta_rows(inst: ProblemInstance, vm: VariableMap, model: MilpModel,
                    which: int) -> None:
    key = f"theta{which}"
    if key in vm.theta_rows_added:
        return
    vm.theta_rows_added.add(key)
    probs = inst.probabilities
    zeta = vm.zeta1 if which == 1 else vm.zeta2
    theta = vm.theta1 if which == 1 else vm.theta2
    for s in range(inst.dims.n_scenarios):
        row = {int(zeta[sp]): -float(probs[sp])
               for sp in range(inst.dims.n_scenarios)}
        row[int(zeta[s])] = row.get(int(zeta[s]), 0.0) + 1.0
        row[int(theta[s])] = 1.0
        model.add_constraint(f"dev{which}_{s}", row, GE, 0.0)


def build_robust_objective(inst: ProblemInstance, mode: str, vm: VariableMap,
                           model: MilpModel) -> dict[int, float]:
    """Mean + weighted-deviation + infeasibility-penalty objective coefficients.

    Also adds the deviation rows for the chosen measure if not yet present.
    """
    if mode == MODE_COST:
        which, lam, zeta, theta = 1, inst.robust.lambda1, vm.zeta1, vm.theta1
    elif mode == MODE_EMISSION:
        which, lam, zeta, theta = 2, inst.robust.lambda2, vm.zeta2, vm.theta2
    else:
        raise FormulationError(f"no robust objective for mode {mode!r}")
    _add_theta_rows(inst, vm, model, which)
    probs = inst.probabilities
    S = inst.dims.n_scenarios
    obj: dict[int, float] = {}

    def bump(vid, c):
        obj[vid] = obj.get(vid, 0.0) + c

    for s in range(S):
        bump(int(zeta[s]), float(probs[s]))          # expectation
        bump(int(zeta[s]), lam * float(probs[s]))    # deviation, own term
        for sp in range(S):                          # deviation, mean term
            bump(int(zeta[sp]), -lam * float(probs[s]) * float(probs[sp]))
        bump(int(theta[s]), 2.0 * lam * float(probs[s]))
    omega = inst.robust.omega
    for s in range(S):
        pen = omega * float(probs[s])
        for idx in np.ndindex(*vm.dplus.shape[:-1]):
            bump(int(vm.dplus[idx + (s,)]), pen)
            bump(int(vm.dminus[idx + (s,)]), pen)
    return {vid: c for vid, c in obj.items() if c != 0.0}


def build_full_model(inst: ProblemInstance, mode: str,
                     options: FormulationOptions | None = None,
                     zstars: tuple[float, float, float] | None = None,
                     ) -> tuple[MilpModel, VariableMap]:
    """Assemble the complete MILP for one objective mode."""
    if mode not in MODES:
        raise FormulationError(f"unknown objective mode {mode!r}")
    options = options or FormulationOptions()
    model = MilpModel(name=f"greenalloc_{mode}",
                      sense=MAX if mode == MODE_QUALITY else MIN)
    vm = build_variables(model, inst, options)
    add_core_constraints(inst, vm, model, options)
    link_scenario_values(inst, vm, model, options)
    _add_theta_rows(inst, vm, model, 1)
    _add_theta_rows(inst, vm, model, 2)

    if mode == MODE_COST:
        model.set_objective(build_robust_objective(inst, MODE_COST, vm, model))
    elif mode == MODE_EMISSION:
        model.set_objective(build_robust_objective(inst, MODE_EMISSION, vm, model))
    elif mode == MODE_QUALITY:
        model.set_objective(build_quality(inst, vm))
    else:
        if zstars is None:
            raise FormulationError("combined mode requires reference optima")
        z1s, z2s, z3s = (float(z) for z in zstars)
        for name, z in (("z1*", z1s), ("z2*", z2s), ("z3*", z3s)):
            if not math.isfinite(z) or z == 0.0:
                raise FormulationError(
                    f"combined mode requires finite nonzero {name}, got {z!r}")
        obj: dict[int, float] = {}
        for sub, scale in ((build_robust_objective(inst, MODE_COST, vm, model),
                            1.0 / abs(z1s)),
                           (build_robust_objective(inst, MODE_EMISSION, vm, model),
                            1.0 / abs(z2s)),
                           (build_quality(inst, vm), -1.0 / abs(z3s))):
            for vid, c in sub.items():
                obj[vid] = obj.get(vid, 0.0) + scale * c
        const = -z1s / abs(z1s) - z2s / abs(z2s) + z3s / abs(z3s)
        model.set_objective(obj, constant=const)
    return model, vm


def build_penalty_regime_model(inst: ProblemInstance, penalty_rate: float | None,
                               mode: str,
                               options: FormulationOptions | None = None,
                               zstars: tuple[float, float, float] | None = None,
                               ) -> tuple[MilpModel, VariableMap]:
    """Same model with trading replaced by a per-unit over-cap penalty.

    ``sell`` is fixed at zero, ``buy`` measures the emission in excess of
    the cap, and the cost carries penalty_rate per excess unit. ``None``
    defaults the rate to the per-period best buying price.
    """
    from dataclasses import replace
    from .domain import Regime
    if penalty_rate is not None and penalty_rate < 0:
        raise FormulationError(f"penalty_rate must be >= 0, got {penalty_rate}")
    pen_inst = replace(inst, regime=Regime(PENALTY, penalty_rate))
    return build_full_model(pen_inst, mode, options, zstars)


# ---------------------------------------------------------------------------
# incumbent repair

def make_repair_callback(inst: ProblemInstance, vm: VariableMap,
                         model: MilpModel,
                         options: FormulationOptions | None = None):
    """Round a fractional LP point into an audited feasible candidate.

    Keeps the LP order, inventory, and backorder levels; re-derives truck
    selections by segment interpolation (bulk on the first echelon, spill on
    the second), deviation variables from the balance residuals, trade
    volumes from the worst-scenario emission, and the scenario scalars and
    deviation slacks by direct evaluation. Returns None when no cheap repair
    exists; candidates are audited by the solver before acceptance.
    """
    options = options or FormulationOptions()
    if not options.zero_breakpoint:
        return None
    d = inst.dims
    I, J, T, S = d.n_products, d.n_suppliers, d.n_periods, d.n_scenarios
    Kp = vm.breakpoints.size
    bp = vm.breakpoints
    det = inst.det
    penalty = inst.regime.kind == PENALTY
    depth = inst.robust.market_depth_bound
    reman = np.stack([(sc.reject_rate * sc.usable_rejected
                       + sc.collect_rate * sc.reusable_collected)
                      * det.remanufacture_emission
                      for sc in inst.scenarios], axis=-1)         # (I, T, S)

    n = model.n_vars
    c1 = np.zeros((S, n))
    c2 = np.zeros((S, n))
    for s in range(S):
        for vid, c in build_scenario_cost(inst, s, vm, options).items():
            c1[s, vid] = c
        for vid, c in build_scenario_emission(inst, s, vm, options).items():
            c2[s, vid] = c
    probs = inst.probabilities

    def segment(load):
        """(q one-hot index, W weights) for one echelon carrying ``load``."""
        k = int(np.searchsorted(bp, load, side="right")) - 1
        k = min(max(k, 0), Kp - 2)
        span = bp[k + 1] - bp[k]
        hi = (load - bp[k]) / span
        weights = np.zeros(Kp)
        weights[k] = 1.0 - hi
        weights[k + 1] = hi
        return k, weights

    def repair(x_lp):
        cand = np.array(x_lp, dtype=float)
        orders = cand[vm.x]                                       # (I, J, T)
        for j in range(J):
            for t in range(T):
                load = float(orders[:, j, t].sum())
                main = min(load, float(bp[-1]))
                rest = load - main
                if rest > bp[1] + 1e-9:
                    return None
                for nech, ell in ((0, main), (1, rest)):
                    k, weights = segment(ell)
                    qvals = np.zeros(Kp)
                    qvals[k] = 1.0
                    cand[vm.q[j, t, :, nech]] = qvals
                    cand[vm.w[j, t, :, nech]] = weights

        # orders, inventory, backorder, and deviations are kept from the LP
        # point: the truck rounding does not touch the balance rows, so they
        # remain satisfied exactly.

        # trade volumes from the worst-scenario emission per period
        buyer = N_ECHELONS - 1
        for t in range(T):
            worst = -math.inf
            for s in range(S):
                emis = float((orders[:, :, t]
                              * det.production_emission[:, :, t]).sum())
                emis += float((orders[:, :, t].sum(axis=1) * reman[:, t, s]).sum())
                for j in range(J):
                    for ke in range(1, Kp):
                        if cand[vm.q[j, t, ke, buyer]] > 0.5:
                            emis += float(det.distance[j]
                                          * det.transport_emission[j, t, ke - 1, buyer])
                worst = max(worst, emis)
            needed = worst - float(det.emission_cap[t])
            if penalty:
                sell = 0.0
                buy_amt = max(0.0, needed)
            else:
                sell = min(float(cand[vm.sell[t]]), depth)
                sell = max(0.0, min(sell, depth - max(0.0, needed)))
                buy_amt = max(0.0, needed + sell)
            if buy_amt > depth + 1e-9:
                return None
            cand[vm.buy[t]] = buy_amt
            cand[vm.sell[t]] = sell

        # evaluate scenario scalars and deviation slacks exactly
        xi1 = c1 @ cand
        xi2 = c2 @ cand
        cand[vm.zeta1] = xi1
        cand[vm.zeta2] = xi2
        cand[vm.theta1] = np.maximum(0.0, float(probs @ xi1) - xi1)
        cand[vm.theta2] = np.maximum(0.0, float(probs @ xi2) - xi2)
        return cand

    return repair
