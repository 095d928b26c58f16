import dataclasses
import math

import numpy as np
import pytest

from greenalloc.domain import PENALTY, Regime
from greenalloc.formulation import (
    MODE_COMBINED, MODE_COST, MODE_EMISSION, MODE_QUALITY,
    FormulationError, FormulationOptions, build_full_model,
    build_penalty_regime_model, build_quality, build_scenario_cost,
    build_scenario_emission, build_variables, effective_breakpoints,
)
from greenalloc.instance import generate_instance
from greenalloc.milp import BINARY, EQ, GE, LE, MilpModel

from conftest import small_config


@pytest.fixture(scope="module")
def cost_built(small_instance):
    model, vm = build_full_model(small_instance, MODE_COST)
    return small_instance, model, vm


def _rows(model):
    return {c.name: c for c in model.constraints}


def test_variable_counts_reference_dims():
    from greenalloc.domain import Dimensions
    cfg = small_config()
    cfg = dataclasses.replace(cfg, dims=Dimensions(4, 5, 4, 3, 3, 3))
    inst = generate_instance(cfg)
    model, vm = build_full_model(inst, MODE_COST)
    # x 80, r/b 16 each, buy/sell 4 each, q/w 5*4*4*2=160 each,
    # deviations 240 each, and 4 scenario vectors of 3
    assert model.n_vars == 932
    assert len(model.binary_ids()) == 160
    assert vm.q.shape == (5, 4, 4, 2)
    assert vm.breakpoints[0] == 0.0


def test_zero_breakpoint_prepended_only_when_enabled(small_instance):
    on = effective_breakpoints(small_instance, FormulationOptions())
    off = effective_breakpoints(
        small_instance,
        FormulationOptions(zero_breakpoint=False, echelon_exclusive=False))
    np.testing.assert_array_equal(on[1:], off)
    assert on[0] == 0.0


def test_options_conflict_rejected():
    with pytest.raises(FormulationError, match="zero_breakpoint"):
        FormulationOptions(zero_breakpoint=False, echelon_exclusive=True)


def test_unknown_mode_rejected(small_instance):
    with pytest.raises(FormulationError, match="mode"):
        build_full_model(small_instance, "lexicographic")


def test_cost_coefficients_match_hand_formula(cost_built):
    inst, model, vm = cost_built
    det = inst.det
    s, i, j, t = 1, 0, 1, 1
    sc = inst.scenarios[s]
    coeffs = build_scenario_cost(inst, s, vm)
    e = sc.reject_rate[i, t]
    p = sc.collect_rate[i, t]
    u = sc.usable_rejected[i, t]
    v = sc.reusable_collected[i, t]
    expected = (sc.delay_days[j, t] * det.delay_penalty[i, j, t]
                + e * det.reject_loss[i, j, t]
                + sc.purchase_cost[i, j, t]
                + (e + p) * det.disassembly_cost[i, t]
                + (e * u + p * v) * det.remanufacture_cost[i, t]
                + (e * (1 - u) + p * (1 - v)) * det.disposal_cost[i, t])
    assert coeffs[int(vm.x[i, j, t])] == pytest.approx(expected, rel=1e-12)
    assert coeffs[int(vm.r[i, t])] == det.holding_cost[i, t]
    assert coeffs[int(vm.b[i, t])] == det.backorder_cost[i, t]


def test_cost_carries_trade_terms_and_transport(cost_built):
    inst, model, vm = cost_built
    coeffs = build_scenario_cost(inst, 0, vm)
    t = 1
    assert coeffs[int(vm.buy[t])] == pytest.approx(vm.buy_price[t])
    assert coeffs[int(vm.sell[t])] == pytest.approx(-vm.sell_price[t])
    # synthetic zero segment has no transport cost; real segments do
    j, n = 0, 1
    assert int(vm.q[j, t, 0, n]) not in coeffs
    assert coeffs[int(vm.q[j, t, 2, n])] == pytest.approx(
        inst.det.transport_cost[j, t, 1, n])


def test_emission_coefficients_match_hand_formula(cost_built):
    inst, model, vm = cost_built
    det = inst.det
    s, i, j, t = 2, 1, 0, 0
    sc = inst.scenarios[s]
    coeffs = build_scenario_emission(inst, s, vm)
    expected = (det.production_emission[i, j, t]
                + (sc.reject_rate[i, t] * sc.usable_rejected[i, t]
                   + sc.collect_rate[i, t] * sc.reusable_collected[i, t])
                * det.remanufacture_emission[i, t])
    assert coeffs[int(vm.x[i, j, t])] == pytest.approx(expected, rel=1e-12)
    # only the buyer-side echelon contributes truck emissions
    assert int(vm.q[j, t, 1, 0]) not in coeffs
    assert coeffs[int(vm.q[j, t, 1, 1])] == pytest.approx(
        det.distance[j] * det.transport_emission[j, t, 0, 1])


def test_quality_sums_four_scores(cost_built):
    inst, model, vm = cost_built
    det = inst.det
    coeffs = build_quality(inst, vm)
    i, j, t = 0, 1, 0
    expected = (det.score_env_mgmt[i, j, t] + det.score_green_product[i, j, t]
                + det.score_recyclability[i, j, t] + det.score_toxicity[i, j, t])
    assert coeffs[int(vm.x[i, j, t])] == pytest.approx(expected, rel=1e-12)


def test_balance_row_structure(cost_built):
    inst, model, vm = cost_built
    rows = _rows(model)
    i, t, s = 0, 1, 2
    con = rows[f"bal_{i}_{t}_{s}"]
    sc = inst.scenarios[s]
    flow = (sc.reject_rate[i, t] * sc.usable_rejected[i, t]
            + sc.collect_rate[i, t] * sc.reusable_collected[i, t] + 1.0)
    assert con.sense == EQ
    assert con.rhs == pytest.approx(sc.demand[i, t])
    for j in range(inst.dims.n_suppliers):
        assert con.coeffs[int(vm.x[i, j, t])] == pytest.approx(flow)
        assert con.coeffs[int(vm.dminus[i, j, t, s])] == 1.0
        assert con.coeffs[int(vm.dplus[i, j, t, s])] == -1.0
    assert con.coeffs[int(vm.r[i, t])] == -1.0
    assert con.coeffs[int(vm.b[i, t])] == 1.0
    assert con.coeffs[int(vm.r[i, t - 1])] == 1.0
    assert con.coeffs[int(vm.b[i, t - 1])] == -1.0


def test_cap_row_structure(cost_built):
    inst, model, vm = cost_built
    rows = _rows(model)
    t, s = 0, 1
    con = rows[f"cap_{t}_{s}"]
    assert con.sense == LE
    assert con.rhs == pytest.approx(inst.det.emission_cap[t])
    assert con.coeffs[int(vm.buy[t])] == -1.0
    assert con.coeffs[int(vm.sell[t])] == 1.0
    # the x coefficients equal the emission expression's
    emis = build_scenario_emission(inst, s, vm)
    for idx in np.ndindex(*vm.x.shape):
        if idx[2] != t:
            continue
        assert con.coeffs[int(vm.x[idx])] == pytest.approx(emis[int(vm.x[idx])])


def test_truck_block_rows(cost_built):
    inst, model, vm = cost_built
    rows = _rows(model)
    j, t = 1, 0
    load = rows[f"load_{j}_{t}"]
    assert load.sense == EQ and load.rhs == 0.0
    for ke, bp in enumerate(vm.breakpoints):
        for n in range(2):
            if bp:
                assert load.coeffs[int(vm.w[j, t, ke, n])] == pytest.approx(-bp)
    for n in range(2):
        assert rows[f"selq_{j}_{t}_{n}"].sense == EQ
        assert rows[f"selw_{j}_{t}_{n}"].rhs == 1.0
        adj = rows[f"adj_{j}_{t}_1_{n}"]
        assert adj.coeffs[int(vm.w[j, t, 1, n])] == 1.0
        assert adj.coeffs[int(vm.q[j, t, 1, n])] == -1.0
        assert adj.coeffs[int(vm.q[j, t, 0, n])] == -1.0
    excl = rows[f"excl_{j}_{t}"]
    assert excl.sense == GE and excl.rhs == 1.0
    assert set(excl.coeffs) == {int(vm.q[j, t, 0, n]) for n in range(2)}


def test_theta_rows_link_deviation(cost_built):
    inst, model, vm = cost_built
    rows = _rows(model)
    probs = inst.probabilities
    s = 1
    con = rows[f"dev1_{s}"]
    assert con.sense == GE and con.rhs == 0.0
    assert con.coeffs[int(vm.theta1[s])] == 1.0
    assert con.coeffs[int(vm.zeta1[s])] == pytest.approx(1.0 - probs[s])
    for sp in range(inst.dims.n_scenarios):
        if sp != s:
            assert con.coeffs[int(vm.zeta1[sp])] == pytest.approx(-probs[sp])


def test_robust_objective_coefficients(cost_built):
    inst, model, vm = cost_built
    probs = inst.probabilities
    lam = inst.robust.lambda1
    omega = inst.robust.omega
    obj = model.objective
    # the linear deviation part telescopes away, leaving the expectation on
    # the scenario scalars and 2*lambda*Pr on the slacks
    for s in range(inst.dims.n_scenarios):
        assert obj[int(vm.zeta1[s])] == pytest.approx(probs[s], rel=1e-12)
        assert obj[int(vm.theta1[s])] == pytest.approx(2 * lam * probs[s])
        assert obj[int(vm.dplus[0, 0, 0, s])] == pytest.approx(omega * probs[s])
        assert obj[int(vm.dminus[1, 1, 1, s])] == pytest.approx(omega * probs[s])


def test_quality_model_maximizes(small_instance):
    model, vm = build_full_model(small_instance, MODE_QUALITY)
    assert model.sense == "max"


def test_combined_requires_nonzero_stars(small_instance):
    with pytest.raises(FormulationError, match="reference optima"):
        build_full_model(small_instance, MODE_COMBINED)
    with pytest.raises(FormulationError, match="z2"):
        build_full_model(small_instance, MODE_COMBINED, zstars=(1.0, 0.0, 2.0))
    with pytest.raises(FormulationError, match="z1"):
        build_full_model(small_instance, MODE_COMBINED,
                         zstars=(math.nan, 1.0, 2.0))


def test_combined_objective_is_scaled_sum(small_instance):
    zstars = (-200.0, 50.0, 400.0)
    model, vm = build_full_model(small_instance, MODE_COMBINED, zstars=zstars)
    cost_model, cvm = build_full_model(small_instance, MODE_COST)
    # compare on the cost scalars where only z1 contributes
    for s in range(small_instance.dims.n_scenarios):
        assert model.objective[int(vm.theta1[s])] == pytest.approx(
            cost_model.objective[int(cvm.theta1[s])] / 200.0)
    # quality enters negated (it is maximized in isolation)
    qual = build_quality(small_instance, vm)
    vid = int(vm.x[0, 0, 0])
    contribution = model.objective[vid] - qual[vid] * (-1.0 / 400.0)
    # what remains must be the cost+emission parts, both positive scalings
    assert model.objective_const == pytest.approx(1.0 - 1.0 + 1.0)
    assert contribution != pytest.approx(model.objective[vid])


def test_penalty_regime_fixes_sell_and_prices_excess(small_instance):
    model, vm = build_penalty_regime_model(small_instance, 7.5, MODE_COST)
    for t in range(small_instance.dims.n_periods):
        assert model.variables[int(vm.sell[t])].ub == 0.0
        assert model.objective.get(int(vm.sell[t]), 0.0) == 0.0
    # the per-scenario cost prices excess at the given rate
    coeffs = build_scenario_cost(
        dataclasses.replace(small_instance,
                            regime=Regime(PENALTY, 7.5)), 0, vm)
    assert coeffs[int(vm.buy[0])] == 7.5


def test_penalty_rate_defaults_to_buy_price(small_instance):
    model, vm = build_penalty_regime_model(small_instance, None, MODE_COST)
    pen_inst = dataclasses.replace(small_instance, regime=Regime(PENALTY, None))
    coeffs = build_scenario_cost(pen_inst, 0, vm)
    for t in range(small_instance.dims.n_periods):
        assert coeffs[int(vm.buy[t])] == pytest.approx(vm.buy_price[t])


def test_negative_penalty_rate_rejected(small_instance):
    with pytest.raises(FormulationError, match="penalty_rate"):
        build_penalty_regime_model(small_instance, -1.0, MODE_COST)


def test_deviation_bounds_guard_boundedness(small_instance):
    model = MilpModel()
    vm = build_variables(model, small_instance, FormulationOptions())
    max_demand = np.max(np.stack([sc.demand for sc in small_instance.scenarios]),
                        axis=0)
    i, j, t, s = 0, 1, 1, 2
    assert model.variables[int(vm.dplus[i, j, t, s])].ub == \
        pytest.approx(max_demand[i, t])
    depth = small_instance.robust.market_depth_bound
    assert model.variables[int(vm.buy[0])].ub == depth
