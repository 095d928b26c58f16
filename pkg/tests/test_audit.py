import dataclasses

import numpy as np
import pytest

from greenalloc.audit import audit_report, scenario_emission
from greenalloc.domain import PENALTY, Regime
from greenalloc.procedure import full_solve


@pytest.fixture(scope="module")
def solved(small_instance, fast_tol):
    return full_solve(small_instance, tol=fast_tol)


def _tweak(report, **overrides):
    return dataclasses.replace(report, **overrides)


def test_clean_report_passes(small_instance, solved):
    assert audit_report(small_instance, solved) == []


def test_negative_order_flagged(small_instance, solved):
    x = np.array(solved.x)
    x[0, 0, 0] = -1.0
    msgs = audit_report(small_instance, _tweak(solved, x=x))
    assert any("x has negative" in m for m in msgs)


def test_weight_out_of_range_flagged(small_instance, solved):
    w = np.array(solved.w)
    w[0, 0, 0, 0] = 1.2
    msgs = audit_report(small_instance, _tweak(solved, w=w))
    assert any("w outside" in m for m in msgs)


def test_fractional_selector_flagged(small_instance, solved):
    q = np.array(solved.q)
    q[0, 0, 0, 0] = 0.4
    msgs = audit_report(small_instance, _tweak(solved, q=q))
    assert any("q not integral" in m for m in msgs)


def test_broken_balance_flagged(small_instance, solved):
    r = np.array(solved.r)
    r[0, 0] += 25.0
    msgs = audit_report(small_instance, _tweak(solved, r=r))
    assert any(m.startswith("balance") for m in msgs)


def test_broken_cap_flagged(small_instance, solved):
    sell = np.array(solved.sell) + 500.0
    msgs = audit_report(small_instance, _tweak(solved, sell=sell))
    assert any(m.startswith("cap") for m in msgs)


def test_penalty_regime_sell_flagged(small_instance, solved):
    pen = dataclasses.replace(small_instance,
                              regime=Regime(kind=PENALTY, rate=5.0))
    msgs = audit_report(pen, solved)   # the report sells allowance
    assert any("penalty regime" in m for m in msgs)


def test_broken_load_equation_flagged(small_instance, solved):
    x = np.array(solved.x)
    # shift load between suppliers: balance stays intact per product only if
    # the row sum is unchanged, so move within one product across suppliers
    x[0, 0, 0] += 10.0
    x[0, 1, 0] -= 10.0
    msgs = audit_report(small_instance, _tweak(solved, x=x))
    assert any(m.startswith("load") for m in msgs)


def test_selector_sum_flagged(small_instance, solved):
    q = np.array(solved.q)
    q[1, 0, :, 0] = 0.0
    msgs = audit_report(small_instance, _tweak(solved, q=q))
    assert any("q sum" in m for m in msgs)


def test_adjacency_flagged(small_instance, solved):
    q = np.array(solved.q)
    w = np.array(solved.w)
    # put all weight on a segment whose neighbouring selectors are off
    far = np.argmin(q[0, 0, :, 0])
    w[0, 0, :, 0] = 0.0
    w[0, 0, far, 0] = 1.0
    msgs = audit_report(small_instance, _tweak(solved, q=q, w=w))
    assert any("adjacency" in m or m.startswith("load") for m in msgs)


def test_theta_slack_identity_flagged(small_instance, solved):
    xi1 = np.array(solved.xi1)
    xi1[0] -= 1e6   # far below the mean with theta unchanged
    msgs = audit_report(small_instance, _tweak(solved, xi1=xi1))
    assert any("theta1" in m for m in msgs)


def test_scenario_emission_consistent_with_cap(small_instance, solved):
    det = small_instance.det
    for s in range(small_instance.dims.n_scenarios):
        total = scenario_emission(small_instance, solved, s)
        allowed = (det.emission_cap.sum()
                   + solved.buy.sum() - solved.sell.sum())
        assert total <= allowed + 1e-6 * (1 + abs(allowed))
