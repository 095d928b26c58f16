"""Robust green supplier selection and order allocation under cap-and-trade.

A scenario-based robust mixed-integer model of a closed-loop supply chain:
order allocation across suppliers, inventory and backorder balance with
over-/under-fulfillment slacks, truck-category selection via a piecewise
load formulation, and carbon allowance trading. Three objectives (robust
cost, robust emission, total green-supplier quality) are solved individually
and then combined through a normalized-deviation goal program. The MILP
solver (two-phase simplex plus branch-and-bound) is bundled.
"""

from .analysis import (
    RegimeComparison, RegimeRow, SweepError, SweepReport, SweepRow, SweepSpec,
    apply_parameter, compare_regimes, regime_trend_checks, regimes_to_csv,
    save_csv, summarize_report, sweep, sweep_cap, sweep_prices, sweep_to_csv,
    trend_checks, weakly_decreasing, weakly_increasing,
)
from .audit import audit_report, scenario_emission
from .domain import (
    CAP_AND_TRADE, N_ECHELONS, PENALTY, DeterministicParams, Dimensions,
    ProblemInstance, Regime, RobustParams, ScenarioData, SolveReport,
    StageStats, validate_instance,
)
from .formulation import (
    MODE_COMBINED, MODE_COST, MODE_EMISSION, MODE_QUALITY, MODES,
    FormulationError, FormulationOptions, VariableMap, build_full_model,
    build_penalty_regime_model, make_repair_callback,
)
from .instance import (
    ConfigError, GeneratorConfig, PropagationError, SchemaError,
    config_from_dict, derive_trade_prices, generate_instance,
    instance_from_dict, instance_to_dict, load_config, load_instance,
    propagate_interest, save_instance, validate_config,
)
from .milp import (
    GAP_LIMIT, INFEASIBLE, NODE_LIMIT, NUMERICAL_FAILURE, OPTIMAL, UNBOUNDED,
    LinearConstraint, MilpModel, MilpSolution, ToleranceConfig, export_mps,
    solve_lp, solve_milp,
)
from .plots import plot_regimes, plot_sweep
from .procedure import (
    NormalizationError, ProcedureError, evaluate_objectives, full_solve,
    report_to_csv, report_to_dict, save_report, save_report_csv,
    solve_combined, solve_individual,
)

__version__ = "0.1.0"
