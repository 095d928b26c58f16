"""Random instance generation, price propagation, trade prices, and file I/O.

The generator draws every first-period price family once and then grows
later periods by the interest rate; delays, rates, demand, emissions,
scores, caps, and market offers are drawn for all periods directly.

Reproducibility contract: sampling uses ``numpy.random.default_rng(seed)``
(PCG64) and draws one uniform block per parameter family, in the fixed
family order of ``_FAMILY_ORDER``, each block filled in row-major canonical
index order (products, suppliers, periods, trucks, echelons, scenarios,
offers). Identical seeds therefore give identical instances on any platform.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .domain import (
    CAP_AND_TRADE, PENALTY, N_ECHELONS,
    DeterministicParams, Dimensions, ProblemInstance, Regime, RobustParams,
    ScenarioData, validate_instance,
)


class ConfigError(ValueError):
    """Invalid generator configuration."""


class SchemaError(ValueError):
    """Malformed instance or config document."""


class PropagationError(RuntimeError):
    """Interest propagation applied to already-propagated prices."""


#: family sampling order (fixed; part of the reproducibility contract)
_FAMILY_ORDER = (
    "purchase_cost", "holding_cost", "backorder_cost", "delay_days",
    "delay_penalty", "reject_rate", "collect_rate", "usable_rejected",
    "reusable_collected", "reject_loss", "seller_offers", "buyer_offers",
    "disassembly_cost", "remanufacture_cost", "disposal_cost",
    "transport_cost", "demand", "distance", "transport_emission",
    "production_emission", "remanufacture_emission", "score_env_mgmt",
    "score_green_product", "score_recyclability", "score_toxicity",
    "emission_cap",
)

#: families inflated by the interest rate (first-period draw only)
PRICE_FAMILIES = (
    "purchase_cost", "holding_cost", "backorder_cost", "delay_penalty",
    "reject_loss", "disassembly_cost", "remanufacture_cost", "disposal_cost",
    "transport_cost",
)


def _default_bounds() -> dict:
    return {
        # per-scenario bounds: pessimistic, most realistic, optimistic
        "purchase_cost": [(10, 23), (11.5, 26), (13, 30)],
        "holding_cost": (28, 35),
        "backorder_cost": (33, 41),
        "delay_days": [(0, 5), (0, 5), (0, 5)],
        "delay_penalty": (6, 12),
        "reject_rate": [(0.03, 0.092), (0.035, 0.126), (0.04, 0.145)],
        "collect_rate": [(0.02, 0.08), (0.023, 0.092), (0.027, 0.105)],
        "usable_rejected": [(0.6, 0.9), (0.62, 0.93), (0.63, 0.94)],
        "reusable_collected": [(0.6, 0.9), (0.72, 0.93), (0.73, 0.94)],
        "reject_loss": (5, 11),
        "seller_offers": (4000, 4020),
        "buyer_offers": (3980, 4000),
        "disassembly_cost": (4, 7),
        "remanufacture_cost": (10, 17),
        "disposal_cost": (3, 5),
        # transport cost per (truck type, echelon)
        "transport_cost": [[(28, 37), (29, 38)],
                           [(35, 40), (36, 41)],
                           [(39, 52), (40, 53)]],
        "demand": [(2500, 4600), (2930, 4760), (3070, 4990)],
        "distance": (3, 7),
        # transport emission per truck type
        "transport_emission": [(0.29, 0.37), (0.33, 0.46), (0.41, 0.49)],
        "production_emission": (0.006, 0.012),
        "remanufacture_emission": (0.006, 0.012),
        "score_env_mgmt": (1, 10),
        "score_green_product": (1, 10),
        "score_recyclability": (1, 10),
        "score_toxicity": (1, 10),
        "emission_cap": (170, 200),
    }


@dataclass
class GeneratorConfig:
    """Everything the random instance generator needs."""

    seed: int = 0
    dims: Dimensions = field(default_factory=lambda: Dimensions(4, 5, 4, 3, 3, 3))
    interest_rate: float = 0.04
    lambda1: float = 15.0
    lambda2: float = 15.0
    omega: float = 50.0
    market_depth_bound: float = 1e6
    probabilities: tuple = (0.2, 0.6, 0.2)
    truck_breakpoints: tuple = (3000.0, 6000.0, 14000.0)
    bounds: dict = field(default_factory=_default_bounds)


def _iter_pairs(name, spec):
    """Yield (label, low, high) for every bound pair in a possibly nested spec."""
    if isinstance(spec, (tuple, list)) and len(spec) == 2 and all(
            isinstance(v, (int, float)) for v in spec):
        yield name, float(spec[0]), float(spec[1])
        return
    if not isinstance(spec, (tuple, list)):
        raise ConfigError(f"bounds for {name} must be a (low, high) pair or a list of them")
    for idx, sub in enumerate(spec):
        yield from _iter_pairs(f"{name}[{idx}]", sub)


def validate_config(cfg: GeneratorConfig) -> None:
    """Raise ConfigError naming the first offending field."""
    d = cfg.dims
    for name, val in d.as_dict().items():
        if not isinstance(val, (int, np.integer)) or val < 1:
            raise ConfigError(f"dims.{name} must be a positive integer, got {val!r}")
    if cfg.interest_rate < 0:
        raise ConfigError(f"interest_rate must be >= 0, got {cfg.interest_rate}")
    for name in ("lambda1", "lambda2", "omega"):
        if getattr(cfg, name) < 0:
            raise ConfigError(f"{name} must be >= 0, got {getattr(cfg, name)}")
    if not cfg.market_depth_bound > 0:
        raise ConfigError(f"market_depth_bound must be > 0, got {cfg.market_depth_bound}")
    probs = np.asarray(cfg.probabilities, dtype=float)
    if probs.shape != (d.n_scenarios,):
        raise ConfigError(
            f"probabilities must have length {d.n_scenarios}, got {len(cfg.probabilities)}")
    if abs(probs.sum() - 1.0) > 1e-9:
        raise ConfigError(f"probabilities sum to {probs.sum():g}, expected 1")
    bp = np.asarray(cfg.truck_breakpoints, dtype=float)
    if bp.shape != (d.n_truck_types,):
        raise ConfigError(
            f"truck_breakpoints must have length {d.n_truck_types}, got {len(bp)}")
    if np.any(np.diff(bp) <= 0) or np.any(bp < 0):
        raise ConfigError(f"truck_breakpoints must be positive and increasing, got {bp.tolist()}")

    missing = [k for k in _FAMILY_ORDER if k not in cfg.bounds]
    if missing:
        raise ConfigError(f"bounds missing for {missing[0]}")
    unknown = [k for k in cfg.bounds if k not in _FAMILY_ORDER]
    if unknown:
        raise ConfigError(f"unknown bounds entry {unknown[0]!r}")
    for name, lo, hi in [t for k in _FAMILY_ORDER for t in _iter_pairs(k, cfg.bounds[k])]:
        if lo > hi:
            raise ConfigError(f"bounds for {name}: low {lo:g} > high {hi:g}")

    per_scenario = ("purchase_cost", "delay_days", "reject_rate", "collect_rate",
                    "usable_rejected", "reusable_collected", "demand")
    for name in per_scenario:
        if len(cfg.bounds[name]) != d.n_scenarios:
            raise ConfigError(
                f"bounds for {name} must list {d.n_scenarios} scenario pairs")
    tc = cfg.bounds["transport_cost"]
    if len(tc) != d.n_truck_types or any(len(row) != N_ECHELONS for row in tc):
        raise ConfigError("bounds for transport_cost must be a K x 2 table of pairs")
    if len(cfg.bounds["transport_emission"]) != d.n_truck_types:
        raise ConfigError("bounds for transport_emission must list one pair per truck type")


def _scenario_lohi(spec, shape):
    """Stack per-scenario (low, high) pairs onto a trailing scenario axis."""
    lo = np.stack([np.full(shape, p[0], dtype=float) for p in spec], axis=-1)
    hi = np.stack([np.full(shape, p[1], dtype=float) for p in spec], axis=-1)
    return lo, hi


def generate_instance(cfg: GeneratorConfig) -> ProblemInstance:
    """Draw a random instance; deterministic for a given config and seed."""
    validate_config(cfg)
    d = cfg.dims
    I, J, T = d.n_products, d.n_suppliers, d.n_periods
    K, S, M = d.n_truck_types, d.n_scenarios, d.n_market_offers
    rng = np.random.default_rng(int(cfg.seed))
    b = cfg.bounds

    def draw(name, shape, lohi=None):
        if lohi is None:
            lo, hi = b[name]
            return rng.uniform(lo, hi, size=shape)
        lo, hi = lohi
        return rng.uniform(lo, hi)

    C1 = draw("purchase_cost", None, _scenario_lohi(b["purchase_cost"], (I, J)))  # (I,J,S)
    h1 = draw("holding_cost", (I,))
    f1 = draw("backorder_cost", (I,))
    L = draw("delay_days", None, _scenario_lohi(b["delay_days"], (J, T)))        # (J,T,S)
    G1 = draw("delay_penalty", (I, J))
    e = draw("reject_rate", None, _scenario_lohi(b["reject_rate"], (I, T)))
    p = draw("collect_rate", None, _scenario_lohi(b["collect_rate"], (I, T)))
    u = draw("usable_rejected", None, _scenario_lohi(b["usable_rejected"], (I, T)))
    v = draw("reusable_collected", None, _scenario_lohi(b["reusable_collected"], (I, T)))
    O1 = draw("reject_loss", (I, J))
    SP = draw("seller_offers", (T, M))
    BP = draw("buyer_offers", (T, M))
    DC1 = draw("disassembly_cost", (I,))
    RC1 = draw("remanufacture_cost", (I,))
    DP1 = draw("disposal_cost", (I,))
    tc_lo = np.broadcast_to(np.array([[pair[0] for pair in row] for row in b["transport_cost"]]),
                            (J, K, N_ECHELONS))
    tc_hi = np.broadcast_to(np.array([[pair[1] for pair in row] for row in b["transport_cost"]]),
                            (J, K, N_ECHELONS))
    TC1 = rng.uniform(tc_lo, tc_hi)                                              # (J,K,2)
    DE = draw("demand", None, _scenario_lohi(b["demand"], (I, T)))
    dist = draw("distance", (J,))
    cet_lo = np.broadcast_to(
        np.array([[pair[0]] * N_ECHELONS for pair in b["transport_emission"]]),
        (J, T, K, N_ECHELONS))
    cet_hi = np.broadcast_to(
        np.array([[pair[1]] * N_ECHELONS for pair in b["transport_emission"]]),
        (J, T, K, N_ECHELONS))
    CET = rng.uniform(cet_lo, cet_hi)
    CEP = draw("production_emission", (I, J, T))
    CER = draw("remanufacture_emission", (I, T))
    EM = draw("score_env_mgmt", (I, J, T))
    GP = draw("score_green_product", (I, J, T))
    RE = draw("score_recyclability", (I, J, T))
    PT = draw("score_toxicity", (I, J, T))
    CAP = draw("emission_cap", (T,))

    def first_period(arr1, shape):
        out = np.zeros(shape)
        out[..., 0] = arr1
        return out

    scenarios = []
    for s in range(S):
        scenarios.append(ScenarioData(
            probability=float(cfg.probabilities[s]),
            purchase_cost=first_period(C1[..., s], (I, J, T)),
            delay_days=L[..., s],
            reject_rate=e[..., s],
            collect_rate=p[..., s],
            usable_rejected=u[..., s],
            reusable_collected=v[..., s],
            demand=DE[..., s],
        ))

    TC = np.zeros((J, T, K, N_ECHELONS))
    TC[:, 0] = TC1

    det = DeterministicParams(
        interest_rate=float(cfg.interest_rate),
        holding_cost=first_period(h1, (I, T)),
        backorder_cost=first_period(f1, (I, T)),
        delay_penalty=first_period(G1, (I, J, T)),
        reject_loss=first_period(O1, (I, J, T)),
        seller_offers=SP,
        buyer_offers=BP,
        disassembly_cost=first_period(DC1, (I, T)),
        remanufacture_cost=first_period(RC1, (I, T)),
        disposal_cost=first_period(DP1, (I, T)),
        transport_cost=TC,
        distance=dist,
        transport_emission=CET,
        production_emission=CEP,
        remanufacture_emission=CER,
        score_env_mgmt=EM,
        score_green_product=GP,
        score_recyclability=RE,
        score_toxicity=PT,
        emission_cap=CAP,
        truck_breakpoints=np.asarray(cfg.truck_breakpoints, dtype=float),
        prices_propagated=False,
    )
    inst = ProblemInstance(
        dims=d,
        scenarios=tuple(scenarios),
        det=det,
        robust=RobustParams(cfg.lambda1, cfg.lambda2, cfg.omega, cfg.market_depth_bound),
        regime=Regime(CAP_AND_TRADE),
    )
    return propagate_interest(inst)


def propagate_interest(inst: ProblemInstance) -> ProblemInstance:
    """Grow every priced parameter family one period at a time by the interest rate.

    Only the nine priced families are touched; emissions, scores, caps,
    demand, delays, and market offers stay as given. The instance carries a
    provenance flag so accidental double application is rejected.
    """
    if inst.det.prices_propagated:
        raise PropagationError("prices were already propagated for this instance")
    ir = inst.det.interest_rate
    T = inst.dims.n_periods

    def grow_t_axis(arr, t_axis):
        out = np.array(arr)
        idx_prev = [slice(None)] * out.ndim
        idx_cur = [slice(None)] * out.ndim
        for t in range(1, T):
            idx_prev[t_axis] = t - 1
            idx_cur[t_axis] = t
            out[tuple(idx_cur)] = out[tuple(idx_prev)] * (1.0 + ir)
        return out

    scenarios = tuple(
        replace(sc, purchase_cost=grow_t_axis(sc.purchase_cost, 2))
        for sc in inst.scenarios
    )
    det = replace(
        inst.det,
        holding_cost=grow_t_axis(inst.det.holding_cost, 1),
        backorder_cost=grow_t_axis(inst.det.backorder_cost, 1),
        delay_penalty=grow_t_axis(inst.det.delay_penalty, 2),
        reject_loss=grow_t_axis(inst.det.reject_loss, 2),
        disassembly_cost=grow_t_axis(inst.det.disassembly_cost, 1),
        remanufacture_cost=grow_t_axis(inst.det.remanufacture_cost, 1),
        disposal_cost=grow_t_axis(inst.det.disposal_cost, 1),
        transport_cost=grow_t_axis(inst.det.transport_cost, 1),
        prices_propagated=True,
    )
    return replace(inst, scenarios=scenarios, det=det)


def derive_trade_prices(inst: ProblemInstance) -> tuple[np.ndarray, np.ndarray]:
    """Best per-period trade prices from the market offers.

    Selling goes to the highest buyer offer; buying comes from the lowest
    seller offer. Both are fixed by the data, so they enter the model as
    constants rather than variables.
    """
    BP = inst.det.buyer_offers
    SP = inst.det.seller_offers
    if BP.size == 0 or SP.size == 0:
        raise SchemaError("market offer lists are empty")
    sell_price = BP.max(axis=1)
    buy_price = SP.min(axis=1)
    return sell_price, buy_price


# ---------------------------------------------------------------------------
# serialization

_SCENARIO_FIELDS = [f.name for f in dataclasses.fields(ScenarioData)]
_DET_FIELDS = [f.name for f in dataclasses.fields(DeterministicParams)]
_ROBUST_FIELDS = [f.name for f in dataclasses.fields(RobustParams)]


def instance_to_dict(inst: ProblemInstance) -> dict:
    def arrays(obj, names):
        out = {}
        for name in names:
            val = getattr(obj, name)
            out[name] = val.tolist() if isinstance(val, np.ndarray) else val
        return out

    return {
        "dims": inst.dims.as_dict(),
        "scenarios": [arrays(sc, _SCENARIO_FIELDS) for sc in inst.scenarios],
        "det": arrays(inst.det, _DET_FIELDS),
        "robust": arrays(inst.robust, _ROBUST_FIELDS),
        "regime": {"kind": inst.regime.kind, "rate": inst.regime.rate},
    }


def _strict_keys(doc: dict, allowed, where: str) -> None:
    unknown = [k for k in doc if k not in allowed]
    if unknown:
        raise SchemaError(f"unknown key {unknown[0]!r} in {where}")
    missing = [k for k in allowed if k not in doc]
    if missing:
        raise SchemaError(f"missing key {missing[0]!r} in {where}")


def instance_from_dict(doc: dict) -> ProblemInstance:
    if not isinstance(doc, dict):
        raise SchemaError("instance document must be an object")
    _strict_keys(doc, ("dims", "scenarios", "det", "robust", "regime"), "instance")
    _strict_keys(doc["dims"], tuple(Dimensions(1, 1, 1, 1, 1, 1).as_dict()), "dims")
    dims = Dimensions(**{k: int(val) for k, val in doc["dims"].items()})

    if not isinstance(doc["scenarios"], list):
        raise SchemaError("scenarios must be a list")
    if len(doc["scenarios"]) != dims.n_scenarios:
        raise SchemaError(
            f"scenario list has length {len(doc['scenarios'])}, "
            f"expected {dims.n_scenarios}")
    scenarios = []
    for s, sd in enumerate(doc["scenarios"]):
        _strict_keys(sd, _SCENARIO_FIELDS, f"scenarios[{s}]")
        scenarios.append(ScenarioData(
            probability=float(sd["probability"]),
            **{k: np.asarray(sd[k], dtype=float)
               for k in _SCENARIO_FIELDS if k != "probability"}))
    _strict_keys(doc["det"], _DET_FIELDS, "det")
    det_kwargs = {}
    for k in _DET_FIELDS:
        if k in ("interest_rate",):
            det_kwargs[k] = float(doc["det"][k])
        elif k == "prices_propagated":
            det_kwargs[k] = bool(doc["det"][k])
        else:
            det_kwargs[k] = np.asarray(doc["det"][k], dtype=float)
    det = DeterministicParams(**det_kwargs)
    _strict_keys(doc["robust"], _ROBUST_FIELDS, "robust")
    robust = RobustParams(**{k: float(doc["robust"][k]) for k in _ROBUST_FIELDS})
    _strict_keys(doc["regime"], ("kind", "rate"), "regime")
    rate = doc["regime"]["rate"]
    regime = Regime(doc["regime"]["kind"], None if rate is None else float(rate))

    inst = ProblemInstance(dims=dims, scenarios=tuple(scenarios), det=det,
                           robust=robust, regime=regime)
    shape_violations = [msg for msg in validate_instance(inst) if "shape" in msg]
    if shape_violations:
        raise SchemaError("; ".join(shape_violations))
    return inst


def save_instance(inst: ProblemInstance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(inst), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_instance(path) -> ProblemInstance:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"malformed instance document: {exc}") from exc
    return instance_from_dict(doc)


# ---------------------------------------------------------------------------
# generator config I/O

def config_from_dict(doc: dict) -> GeneratorConfig:
    if not isinstance(doc, dict):
        raise SchemaError("config document must be an object")
    allowed = {f.name for f in dataclasses.fields(GeneratorConfig)}
    unknown = [k for k in doc if k not in allowed]
    if unknown:
        raise SchemaError(f"unknown key {unknown[0]!r} in generator config")
    kwargs = dict(doc)
    if "dims" in kwargs:
        _strict_keys(kwargs["dims"], tuple(Dimensions(1, 1, 1, 1, 1, 1).as_dict()), "dims")
        kwargs["dims"] = Dimensions(**{k: int(val) for k, val in kwargs["dims"].items()})
    if "bounds" in kwargs:
        merged = _default_bounds()
        merged.update(kwargs["bounds"])
        kwargs["bounds"] = merged
    cfg = GeneratorConfig(**kwargs)
    validate_config(cfg)
    return cfg


def load_config(path) -> GeneratorConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"malformed config document: {exc}") from exc
    return config_from_dict(doc)
