import csv
import io
import json
import math

import numpy as np
import pytest

import greenalloc.analysis as analysis
from greenalloc.analysis import (
    RegimeComparison, RegimeRow, SweepError, SweepReport, SweepRow, SweepSpec,
    apply_parameter, compare_regimes, regime_trend_checks, regimes_to_csv,
    summarize_report, sweep, sweep_cap, sweep_prices, sweep_to_csv,
    trend_checks, weakly_decreasing, weakly_increasing,
)
from greenalloc.procedure import ProcedureError, full_solve


def test_spec_rejects_unknown_parameter(small_instance):
    with pytest.raises(SweepError, match="unknown sweep parameter"):
        SweepSpec("theta", (1.0,), small_instance)


def test_spec_rejects_empty_and_nonfinite_values(small_instance):
    with pytest.raises(SweepError, match="empty"):
        SweepSpec("omega", (), small_instance)
    with pytest.raises(SweepError, match="finite"):
        SweepSpec("omega", (1.0, math.inf), small_instance)


def test_spec_rejects_scale_below_minus_one(small_instance):
    with pytest.raises(SweepError, match="> -1"):
        SweepSpec("cap_scale", (-1.5,), small_instance)
    # robust weights are absolute values, not factors, so -1.5 is allowed
    SweepSpec("omega", (-1.5,), small_instance)


def test_apply_parameter_robust_weight(small_instance):
    out = apply_parameter(small_instance, "lambda2", 42.0)
    assert out.robust.lambda2 == 42.0
    assert out.robust.lambda1 == small_instance.robust.lambda1
    np.testing.assert_array_equal(out.det.emission_cap,
                                  small_instance.det.emission_cap)


def test_apply_parameter_scales_are_multiplicative(small_instance):
    tight = apply_parameter(small_instance, "cap_scale", -0.25)
    np.testing.assert_allclose(tight.det.emission_cap,
                               small_instance.det.emission_cap * 0.75)
    rich = apply_parameter(small_instance, "bp_scale", 0.1)
    np.testing.assert_allclose(rich.det.buyer_offers,
                               small_instance.det.buyer_offers * 1.1)
    cheap = apply_parameter(small_instance, "sp_scale", -0.1)
    np.testing.assert_allclose(cheap.det.seller_offers,
                               small_instance.det.seller_offers * 0.9)


def test_single_point_sweep_matches_full_solve(small_instance, fast_tol):
    report = full_solve(small_instance, tol=fast_tol)
    spec = SweepSpec("omega", (small_instance.robust.omega,), small_instance)
    rows = sweep(spec, tol=fast_tol).rows
    assert len(rows) == 1
    row = rows[0]
    assert row.status == "optimal"
    assert row.z_total == pytest.approx(report.z_total, rel=1e-9)
    assert row.z1_star == pytest.approx(report.z1_star, rel=1e-9)
    assert row.buy_total == pytest.approx(float(report.buy.sum()), abs=1e-9)
    assert row.stage_statuses == tuple(s.status for s in report.stage_stats)


def test_summarize_report_deviation_matches_hand_value(small_instance, fast_tol):
    report = full_solve(small_instance, tol=fast_tol)
    row = summarize_report(small_instance, 0.0, report)
    probs = small_instance.probabilities
    mean = float(probs @ report.xi1)
    expected = float(probs @ np.abs(report.xi1 - mean))
    assert row.deviation1 == pytest.approx(expected, rel=1e-12)


def test_sweep_captures_point_failures(small_instance, fast_tol, monkeypatch):
    calls = {"n": 0}
    real = analysis.full_solve

    def flaky(inst, **kw):
        calls["n"] += 1
        if calls["n"] == 2:
            raise ProcedureError("midpoint exploded", status="numerical_failure")
        return real(inst, **kw)

    monkeypatch.setattr(analysis, "full_solve", flaky)
    spec = SweepSpec("omega", (0.0, 25.0, 50.0), small_instance)
    report = sweep(spec, tol=fast_tol)
    statuses = [r.status for r in report.rows]
    assert statuses == ["optimal", "error", "optimal"]
    assert "midpoint exploded" in report.rows[1].error
    assert trend_checks(report) == [("all points solved", False)]


def test_sweep_cap_and_prices_guard_parameter(small_instance):
    with pytest.raises(SweepError, match="cap_scale"):
        sweep_cap(SweepSpec("omega", (1.0,), small_instance))
    with pytest.raises(SweepError, match="bp_scale"):
        sweep_prices(SweepSpec("cap_scale", (0.0,), small_instance))


def test_weak_monotone_helpers():
    assert weakly_increasing([1.0, 1.0, 2.0])
    assert weakly_increasing([1e9, 1e9 * (1 + 1e-10)])  # within slack
    assert not weakly_increasing([2.0, 1.0])
    assert weakly_decreasing([3.0, 1.0, 1.0])
    assert not weakly_decreasing([1.0, 3.0])


def _mkrows(parameter, **columns):
    n = len(next(iter(columns.values())))
    rows = []
    for k in range(n):
        rows.append(SweepRow(value=float(k), status="optimal",
                             **{name: vals[k] for name, vals in columns.items()}))
    return SweepReport(parameter=parameter, seed=0, rows=rows)


def test_trend_checks_omega_uses_stage_measures():
    report = _mkrows("omega",
                     stage1_infeasibility=[5.0, 4.0, 4.0],
                     z_total=[1.0, 2.0, 3.0])
    assert dict(trend_checks(report)) == {
        "infeasibility non-increasing": True,
        "z_total non-decreasing": True}
    report = _mkrows("omega",
                     stage1_infeasibility=[4.0, 5.0, 4.0],
                     z_total=[1.0, 2.0, 3.0])
    assert dict(trend_checks(report))["infeasibility non-increasing"] is False


def test_trend_checks_cap_direction():
    report = _mkrows("cap_scale",
                     z1_star=[1.0, 2.0, 3.0],
                     buy_total=[0.0, 1.0, 2.0],
                     sell_total=[5.0, 3.0, 0.0])
    assert all(ok for _, ok in trend_checks(report))


def test_sweep_csv_roundtrip_and_determinism(small_instance, fast_tol):
    spec = SweepSpec("cap_scale", (0.0, -0.2), small_instance)
    report = sweep_cap(spec, tol=fast_tol)
    text = sweep_to_csv(report)
    assert text == sweep_to_csv(report)
    rows = list(csv.reader(io.StringIO(text)))
    header = rows[0]
    assert header[:4] == ["parameter", "value", "status", "z_total"]
    T = small_instance.dims.n_periods
    assert f"buy_{T - 1}" in header and f"sell_{T - 1}" in header
    assert len(rows) == 1 + len(report.rows)
    body = dict(zip(header, rows[1]))
    assert body["parameter"] == "cap_scale"
    assert float(body["z_total"]) == pytest.approx(report.rows[0].z_total,
                                                   rel=1e-9)
    assert body["arbitrage"] in ("0", "1")


def test_compare_regimes_structure(small_instance, fast_tol):
    comparison = compare_regimes(small_instance, (0.0, -0.2), tol=fast_tol)
    assert [r.cap_scale for r in comparison.rows] == [0.0, -0.2]
    for row in comparison.rows:
        assert not row.error
        assert row.gap == pytest.approx(row.pen_z_total - row.ct_z_total)
    checks = dict(regime_trend_checks(comparison))
    assert checks["all points solved"] is True
    text = regimes_to_csv(comparison)
    parsed = list(csv.reader(io.StringIO(text)))
    assert parsed[0][0] == "cap_scale"
    assert len(parsed) == 3


def test_compare_regimes_propagates_errors(small_instance, fast_tol, monkeypatch):
    def boom(inst, **kw):
        raise ProcedureError("nope", status="infeasible")

    monkeypatch.setattr(analysis, "full_solve", boom)
    comparison = compare_regimes(small_instance, (0.0,), tol=fast_tol)
    assert comparison.rows[0].error == "nope"
    assert dict(regime_trend_checks(comparison))["all points solved"] is False


def test_vanishing_cap_detection(small_instance, monkeypatch):
    # regimes agree from the second cap level on; the gap must be declared
    # vanished exactly there
    def scripted(args):
        inst, _, cap, _, _ = args
        penalty = inst.regime.kind == "penalty"
        z = 2.5 if (penalty and cap == 0.0) else 2.0
        return SweepRow(value=cap, status="optimal", z_total=z)

    monkeypatch.setattr(analysis, "_solve_point", scripted)
    comparison = compare_regimes(small_instance, (0.0, -0.1, -0.2))
    assert [r.gap for r in comparison.rows] == [0.5, 0.0, 0.0]
    assert comparison.vanishing_cap == -0.1
