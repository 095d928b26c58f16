"""Problem data types for robust green supplier selection and order allocation.

All index conventions follow one canonical order throughout the package:
products i, suppliers j, periods t, truck types k, echelons n (1 = supplier
trucks, 2 = buyer trucks, stored 0-based), scenarios s, market offers m.
Arrays are plain numpy float arrays shaped in that order.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

CAP_AND_TRADE = "cap_and_trade"
PENALTY = "penalty"

#: the supply chain has exactly two transport echelons
N_ECHELONS = 2


def _freeze(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Dimensions:
    """Cardinality of every index set of one problem instance."""

    n_products: int
    n_suppliers: int
    n_periods: int
    n_truck_types: int
    n_scenarios: int
    n_market_offers: int

    def as_dict(self) -> dict:
        return {
            "n_products": self.n_products,
            "n_suppliers": self.n_suppliers,
            "n_periods": self.n_periods,
            "n_truck_types": self.n_truck_types,
            "n_scenarios": self.n_scenarios,
            "n_market_offers": self.n_market_offers,
        }


@dataclass(frozen=True)
class ScenarioData:
    """Uncertain data realized under one scenario.

    Shapes: purchase_cost (I, J, T); delay_days (J, T); reject_rate,
    collect_rate, usable_rejected, reusable_collected, demand (I, T).
    """

    probability: float
    purchase_cost: np.ndarray
    delay_days: np.ndarray
    reject_rate: np.ndarray
    collect_rate: np.ndarray
    usable_rejected: np.ndarray
    reusable_collected: np.ndarray
    demand: np.ndarray

    def __post_init__(self):
        for name in (
            "purchase_cost",
            "delay_days",
            "reject_rate",
            "collect_rate",
            "usable_rejected",
            "reusable_collected",
            "demand",
        ):
            object.__setattr__(self, name, _freeze(getattr(self, name)))


@dataclass(frozen=True)
class DeterministicParams:
    """Scenario-independent parameters.

    Shapes: holding_cost, backorder_cost, disassembly_cost,
    remanufacture_cost, disposal_cost, remanufacture_emission, and the
    emission/score tables follow the canonical index order documented in the
    module docstring; transport arrays are (J, T, K, 2); market offers are
    (T, M); truck_breakpoints is (K,).
    """

    interest_rate: float
    holding_cost: np.ndarray          # (I, T)
    backorder_cost: np.ndarray        # (I, T)
    delay_penalty: np.ndarray         # (I, J, T)
    reject_loss: np.ndarray           # (I, J, T)
    seller_offers: np.ndarray         # (T, M)  SP
    buyer_offers: np.ndarray          # (T, M)  BP
    disassembly_cost: np.ndarray      # (I, T)
    remanufacture_cost: np.ndarray    # (I, T)
    disposal_cost: np.ndarray         # (I, T)
    transport_cost: np.ndarray        # (J, T, K, 2)
    distance: np.ndarray              # (J,)
    transport_emission: np.ndarray    # (J, T, K, 2)
    production_emission: np.ndarray   # (I, J, T)
    remanufacture_emission: np.ndarray  # (I, T)
    score_env_mgmt: np.ndarray        # (I, J, T)
    score_green_product: np.ndarray   # (I, J, T)
    score_recyclability: np.ndarray   # (I, J, T)
    score_toxicity: np.ndarray        # (I, J, T)
    emission_cap: np.ndarray          # (T,)
    truck_breakpoints: np.ndarray     # (K,)
    prices_propagated: bool = False

    _ARRAYS = (
        "holding_cost",
        "backorder_cost",
        "delay_penalty",
        "reject_loss",
        "seller_offers",
        "buyer_offers",
        "disassembly_cost",
        "remanufacture_cost",
        "disposal_cost",
        "transport_cost",
        "distance",
        "transport_emission",
        "production_emission",
        "remanufacture_emission",
        "score_env_mgmt",
        "score_green_product",
        "score_recyclability",
        "score_toxicity",
        "emission_cap",
        "truck_breakpoints",
    )

    def __post_init__(self):
        for name in self._ARRAYS:
            object.__setattr__(self, name, _freeze(getattr(self, name)))


@dataclass(frozen=True)
class RobustParams:
    """Robustness weights and the market depth guard."""

    lambda1: float
    lambda2: float
    omega: float
    market_depth_bound: float


@dataclass(frozen=True)
class Regime:
    """Carbon regulation regime: cap-and-trade, or a per-unit over-cap penalty.

    ``rate`` is only meaningful for the penalty regime; ``None`` means
    "default to the per-period best buying price" (resolved at model build).
    """

    kind: str = CAP_AND_TRADE
    rate: float | None = None


@dataclass(frozen=True)
class ProblemInstance:
    """Everything defining one model instance.

    Immutable after construction; safe to share across worker processes.
    """

    dims: Dimensions
    scenarios: tuple[ScenarioData, ...]
    det: DeterministicParams
    robust: RobustParams
    regime: Regime = field(default_factory=Regime)

    def __post_init__(self):
        object.__setattr__(self, "scenarios", tuple(self.scenarios))

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([sc.probability for sc in self.scenarios])

    def with_robust(self, **kwargs) -> "ProblemInstance":
        return replace(self, robust=replace(self.robust, **kwargs))


@dataclass
class StageStats:
    """Per-stage solver diagnostics and stage-optimum summary quantities.

    ``objective`` is the stage's own optimum; ``weighted_infeasibility`` is
    the probability-weighted total of the fulfillment slacks at the stage
    solution (the quantity the infeasibility weight multiplies), and
    ``deviation`` is the mean absolute deviation of the stage's scenario
    objective values there. Wall-clock time is excluded from serialization.
    """

    mode: str
    status: str
    nodes: int
    best_bound: float
    rel_gap: float
    wall_seconds: float
    objective: float = float("nan")
    weighted_infeasibility: float = float("nan")
    deviation: float = float("nan")


@dataclass
class SolveReport:
    """Output of the two-step procedure on one instance."""

    z1_star: float
    z2_star: float
    z3_star: float
    z1: float
    z2: float
    z3: float
    z_total: float
    x: np.ndarray              # (I, J, T)
    r: np.ndarray              # (I, T)
    b: np.ndarray              # (I, T)
    buy: np.ndarray            # (T,)
    sell: np.ndarray           # (T,)
    sell_price: np.ndarray     # (T,)
    buy_price: np.ndarray      # (T,)
    q: np.ndarray              # (J, T, K', 2)
    w: np.ndarray              # (J, T, K', 2)
    delta_plus: np.ndarray     # (I, J, T, S)
    delta_minus: np.ndarray    # (I, J, T, S)
    theta1: np.ndarray         # (S,)
    theta2: np.ndarray         # (S,)
    xi1: np.ndarray            # (S,) per-scenario cost objective values
    xi2: np.ndarray            # (S,) per-scenario emission objective values
    status: str
    regime: str = CAP_AND_TRADE
    overrides: dict = field(default_factory=dict)
    stage_stats: list = field(default_factory=list)

    @property
    def total_infeasibility(self) -> float:
        return float(self.delta_plus.sum() + self.delta_minus.sum())


def _check_range(violations, name, arr, lo=None, hi=None):
    a = np.asarray(arr, dtype=float)
    if not np.all(np.isfinite(a)):
        violations.append(f"{name} contains non-finite values")
        return
    if lo is not None and np.any(a < lo):
        violations.append(f"{name} has values below {lo}")
    if hi is not None and np.any(a > hi):
        violations.append(f"{name} has values above {hi}")


def _check_shape(violations, name, arr, shape):
    a = np.asarray(arr)
    if a.shape != shape:
        violations.append(f"{name} has shape {a.shape}, expected {shape}")
        return False
    return True


def validate_instance(inst: ProblemInstance) -> list[str]:
    """Check every instance invariant; returns violation messages (empty = valid)."""
    v: list[str] = []
    d = inst.dims
    I, J, T = d.n_products, d.n_suppliers, d.n_periods
    K, S, M = d.n_truck_types, d.n_scenarios, d.n_market_offers

    for name, val in d.as_dict().items():
        if not isinstance(val, (int, np.integer)) or val < 1:
            v.append(f"dims.{name} must be a positive integer, got {val!r}")
    if v:
        return v

    if len(inst.scenarios) != S:
        v.append(f"expected {S} scenarios, got {len(inst.scenarios)}")
        return v

    probs = inst.probabilities
    if np.any(probs < 0) or np.any(probs > 1):
        v.append("scenario probabilities must lie in [0, 1]")
    if abs(probs.sum() - 1.0) > 1e-9:
        v.append(f"probabilities sum to {probs.sum():g}, expected 1")

    for s, sc in enumerate(inst.scenarios):
        pre = f"scenarios[{s}]"
        ok = True
        ok &= _check_shape(v, f"{pre}.purchase_cost", sc.purchase_cost, (I, J, T))
        ok &= _check_shape(v, f"{pre}.delay_days", sc.delay_days, (J, T))
        for nm in ("reject_rate", "collect_rate", "usable_rejected",
                   "reusable_collected", "demand"):
            ok &= _check_shape(v, f"{pre}.{nm}", getattr(sc, nm), (I, T))
        if not ok:
            continue
        _check_range(v, f"{pre}.purchase_cost", sc.purchase_cost, lo=0.0)
        _check_range(v, f"{pre}.delay_days", sc.delay_days, lo=0.0)
        _check_range(v, f"{pre}.demand", sc.demand, lo=0.0)
        for nm in ("reject_rate", "collect_rate", "usable_rejected",
                   "reusable_collected"):
            _check_range(v, f"{pre}.{nm}", getattr(sc, nm), lo=0.0, hi=1.0)

    det = inst.det
    shapes = {
        "holding_cost": (I, T),
        "backorder_cost": (I, T),
        "delay_penalty": (I, J, T),
        "reject_loss": (I, J, T),
        "seller_offers": (T, M),
        "buyer_offers": (T, M),
        "disassembly_cost": (I, T),
        "remanufacture_cost": (I, T),
        "disposal_cost": (I, T),
        "transport_cost": (J, T, K, N_ECHELONS),
        "distance": (J,),
        "transport_emission": (J, T, K, N_ECHELONS),
        "production_emission": (I, J, T),
        "remanufacture_emission": (I, T),
        "score_env_mgmt": (I, J, T),
        "score_green_product": (I, J, T),
        "score_recyclability": (I, J, T),
        "score_toxicity": (I, J, T),
        "emission_cap": (T,),
        "truck_breakpoints": (K,),
    }
    ok = True
    for nm, shape in shapes.items():
        ok &= _check_shape(v, f"det.{nm}", getattr(det, nm), shape)
    if not ok:
        return v

    if det.interest_rate < 0:
        v.append(f"det.interest_rate must be >= 0, got {det.interest_rate:g}")
    for nm in ("holding_cost", "backorder_cost", "delay_penalty", "reject_loss",
               "seller_offers", "buyer_offers", "disassembly_cost",
               "remanufacture_cost", "disposal_cost", "transport_cost",
               "distance", "transport_emission", "production_emission",
               "remanufacture_emission", "emission_cap"):
        _check_range(v, f"det.{nm}", getattr(det, nm), lo=0.0)
    for nm in ("score_env_mgmt", "score_green_product", "score_recyclability",
               "score_toxicity"):
        _check_range(v, f"det.{nm}", getattr(det, nm), lo=0.0, hi=10.0)

    bp = det.truck_breakpoints
    if np.any(np.diff(bp) <= 0):
        v.append(f"breakpoints not increasing: {bp.tolist()}")
    if np.any(bp < 0):
        v.append("breakpoints must be non-negative")

    rb = inst.robust
    for nm in ("lambda1", "lambda2", "omega"):
        if getattr(rb, nm) < 0:
            v.append(f"robust.{nm} must be >= 0, got {getattr(rb, nm):g}")
    if not rb.market_depth_bound > 0:
        v.append(f"robust.market_depth_bound must be > 0, got {rb.market_depth_bound:g}")

    if inst.regime.kind not in (CAP_AND_TRADE, PENALTY):
        v.append(f"unknown regime kind {inst.regime.kind!r}")
    elif inst.regime.kind == PENALTY and inst.regime.rate is not None and inst.regime.rate < 0:
        v.append(f"penalty rate must be >= 0, got {inst.regime.rate:g}")

    return v
