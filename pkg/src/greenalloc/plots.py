"""Static charts for sweep and regime-comparison results (SVG via Agg)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .analysis import RegimeComparison, SweepReport

_AXIS_LABELS = {
    "omega": "infeasibility weight",
    "lambda1": "cost deviation weight",
    "lambda2": "emission deviation weight",
    "cap_scale": "cap change factor",
    "bp_scale": "buying-price change factor",
    "sp_scale": "selling-price change factor",
}


def plot_sweep(report: SweepReport, path) -> None:
    """Two-panel chart: headline objective response and trade/infeasibility."""
    rows = [r for r in report.rows if not r.error]
    xs = [r.value for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))

    ax1.plot(xs, [r.z_total for r in rows], "o-", label="total deviation")
    ax1.set_ylabel("total normalized deviation")
    if report.parameter == "lambda1":
        twin = ax1.twinx()
        twin.plot(xs, [r.z1 for r in rows], "s--", color="tab:red", label="cost")
        twin.set_ylabel("robust cost")
    elif report.parameter == "lambda2":
        twin = ax1.twinx()
        twin.plot(xs, [r.z2 for r in rows], "s--", color="tab:red",
                  label="emission")
        twin.set_ylabel("robust emission")

    if report.parameter in ("cap_scale", "bp_scale", "sp_scale"):
        ax2.plot(xs, [r.buy_total for r in rows], "o-", label="allowance bought")
        ax2.plot(xs, [r.sell_total for r in rows], "s--", label="allowance sold")
        ax2.set_ylabel("allowance traded")
    else:
        ax2.plot(xs, [r.total_infeasibility for r in rows], "o-",
                 label="infeasibility")
        ax2.set_ylabel("total infeasibility")
    for ax in (ax1, ax2):
        ax.set_xlabel(_AXIS_LABELS.get(report.parameter, report.parameter))
        ax.grid(True, alpha=0.3)
        ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_regimes(comparison: RegimeComparison, path) -> None:
    rows = [r for r in comparison.rows if not r.error]
    xs = [r.cap_scale for r in rows]
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.plot(xs, [r.ct_z_total for r in rows], "o-", label="cap-and-trade")
    ax.plot(xs, [r.pen_z_total for r in rows], "s--", label="penalty")
    ax.set_xlabel("cap change factor")
    ax.set_ylabel("total normalized deviation")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
