"""Command-line frontend.

Subcommands: ``gen`` (instance generation), ``solve`` (two-step procedure),
``sweep`` (one-parameter sensitivity sweep), ``compare-regimes``
(cap-and-trade vs penalty), ``export-mps`` (model export).

Exit codes are a stable contract: 0 success, 2 configuration/validation
error, 3 infeasible, 4 unbounded after the boundedness guards, 5 numerical
failure, 6 asserted trend failed. Human summaries go to stdout; machine
data goes to the requested files, and nothing is written on validation
failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .analysis import (
    SweepError, SweepSpec, compare_regimes, regime_trend_checks,
    regimes_to_csv, save_csv, sweep, sweep_to_csv, trend_checks,
)
from .domain import validate_instance
from .formulation import (
    MODES, FormulationError, FormulationOptions, build_full_model,
)
from .instance import (
    ConfigError, GeneratorConfig, SchemaError, generate_instance, load_config,
    load_instance, save_instance,
)
from .milp import (
    INFEASIBLE, NUMERICAL_FAILURE, UNBOUNDED, ToleranceConfig, export_mps,
)
from .procedure import (
    NormalizationError, ProcedureError, full_solve, save_report,
    save_report_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_UNBOUNDED = 4
EXIT_NUMERICAL = 5
EXIT_TREND = 6

_STATUS_EXITS = {
    INFEASIBLE: EXIT_INFEASIBLE,
    UNBOUNDED: EXIT_UNBOUNDED,
    NUMERICAL_FAILURE: EXIT_NUMERICAL,
}


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_CONFIG):
        super().__init__(message)
        self.code = code


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get("GREENALLOC_WORKERS", "1")))
    except ValueError:
        return 1


def _load_instance(path):
    try:
        return load_instance(path)
    except (OSError, SchemaError, ValueError) as exc:
        raise CliError(f"cannot load instance {path}: {exc}")


def _options(args) -> FormulationOptions:
    try:
        return FormulationOptions(
            zero_breakpoint=not args.no_zero_breakpoint,
            echelon_exclusive=not args.no_echelon_exclusive)
    except FormulationError as exc:
        raise CliError(str(exc))


def _tolerances(args) -> ToleranceConfig:
    if args.rel_gap < 0:
        raise CliError(f"--rel-gap must be >= 0, got {args.rel_gap}")
    return ToleranceConfig(rel_gap=args.rel_gap, node_limit=args.node_limit)


def _add_fidelity_flags(p):
    p.add_argument("--no-zero-breakpoint", action="store_true",
                   help="drop the synthetic zero truck breakpoint")
    p.add_argument("--no-echelon-exclusive", action="store_true",
                   help="drop the echelon-exclusivity strengthening")
    p.add_argument("--rel-gap", type=float, default=1e-4,
                   help="relative optimality gap per stage")
    p.add_argument("--node-limit", type=int, default=20000)


def _apply_overrides(inst, args):
    overrides = {}
    for name in ("omega", "lambda1", "lambda2"):
        val = getattr(args, name)
        if val is not None:
            if val < 0:
                raise CliError(f"--{name} must be >= 0, got {val}")
            overrides[name] = float(val)
    if overrides:
        inst = inst.with_robust(**overrides)
    return inst, overrides


def cmd_gen(args) -> int:
    if args.config:
        try:
            cfg = load_config(args.config)
        except (OSError, ConfigError, ValueError) as exc:
            raise CliError(f"invalid generator config: {exc}")
        if args.seed is not None:
            from dataclasses import replace
            cfg = replace(cfg, seed=args.seed)
    else:
        cfg = GeneratorConfig(seed=args.seed if args.seed is not None else 0)
    try:
        inst = generate_instance(cfg)
    except ConfigError as exc:
        raise CliError(str(exc))
    violations = validate_instance(inst)
    if violations:
        raise CliError("generated instance invalid: " + "; ".join(violations))
    save_instance(inst, args.out)
    print(f"instance (seed {cfg.seed}) written to {args.out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    options = _options(args)
    tol = _tolerances(args)
    inst = _load_instance(args.instance)
    inst, overrides = _apply_overrides(inst, args)
    try:
        report = full_solve(inst, options=options, tol=tol)
    except NormalizationError as exc:
        raise CliError(str(exc))
    except ProcedureError as exc:
        code = _STATUS_EXITS.get(exc.status, EXIT_NUMERICAL)
        raise CliError(str(exc), code=code)
    report.overrides.update(overrides)
    save_report(report, args.report)
    if args.report_csv:
        save_report_csv(report, args.report_csv)
    print(f"status: {report.status}")
    print(f"reference optima: z1*={report.z1_star:.6g} "
          f"z2*={report.z2_star:.6g} z3*={report.z3_star:.6g}")
    print(f"combined: z1={report.z1:.6g} z2={report.z2:.6g} "
          f"z3={report.z3:.6g} total deviation={report.z_total:.6g}")
    print(f"report written to {args.report}")
    return EXIT_OK


def _parse_values(text: str) -> tuple:
    items = [s for s in (part.strip() for part in text.split(",")) if s]
    if not items:
        raise CliError("--values is empty")
    try:
        return tuple(float(s) for s in items)
    except ValueError as exc:
        raise CliError(f"invalid value list: {exc}")


def _print_trends(checks) -> int:
    failed = False
    for name, ok in checks:
        print(f"{name}: {'PASS' if ok else 'FAIL'}")
        failed |= not ok
    return EXIT_TREND if failed else EXIT_OK


def cmd_sweep(args) -> int:
    options = _options(args)
    tol = _tolerances(args)
    inst = _load_instance(args.instance)
    values = _parse_values(args.values)
    try:
        spec = SweepSpec(args.param, values, inst)
    except SweepError as exc:
        raise CliError(str(exc))
    report = sweep(spec, options=options, tol=tol, workers=args.workers)
    save_csv(sweep_to_csv(report), args.out_csv)
    print(f"sweep table written to {args.out_csv}")
    if args.plot:
        from .plots import plot_sweep
        plot_sweep(report, args.plot)
        print(f"chart written to {args.plot}")
    return _print_trends(trend_checks(report))


def cmd_compare_regimes(args) -> int:
    options = _options(args)
    tol = _tolerances(args)
    inst = _load_instance(args.instance)
    caps = _parse_values(args.caps)
    if any(c <= -1.0 for c in caps):
        raise CliError("cap factors must be > -1")
    if args.penalty_rate is not None and args.penalty_rate < 0:
        raise CliError(f"--penalty-rate must be >= 0, got {args.penalty_rate}")
    comparison = compare_regimes(inst, caps, penalty_rate=args.penalty_rate,
                                 options=options, tol=tol,
                                 workers=args.workers)
    save_csv(regimes_to_csv(comparison), args.out_csv)
    print(f"comparison table written to {args.out_csv}")
    if comparison.vanishing_cap is not None:
        print(f"regime gap vanishes from cap factor {comparison.vanishing_cap:g}")
    if args.plot:
        from .plots import plot_regimes
        plot_regimes(comparison, args.plot)
        print(f"chart written to {args.plot}")
    return _print_trends(regime_trend_checks(comparison))


def cmd_export_mps(args) -> int:
    if args.mode not in MODES:
        raise CliError(f"unknown mode {args.mode!r}; expected one of {MODES}")
    inst = _load_instance(args.instance)
    zstars = None
    if args.mode == "combined":
        if not args.report:
            raise CliError(
                "combined mode needs the reference optima; run `solve` first "
                "and pass its report with --report")
        try:
            with open(args.report, encoding="utf-8") as fh:
                doc = json.load(fh)
            zstars = (doc["z1_star"], doc["z2_star"], doc["z3_star"])
        except (OSError, KeyError, ValueError) as exc:
            raise CliError(f"cannot read reference optima from {args.report}: {exc}")
    try:
        model, _ = build_full_model(inst, args.mode, FormulationOptions(),
                                    zstars)
    except FormulationError as exc:
        raise CliError(str(exc))
    text, name_map = export_mps(model)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(text)
    with open(args.out + ".names.json", "w", encoding="utf-8") as fh:
        json.dump(name_map, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"model written to {args.out} (name map: {args.out}.names.json)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="greenalloc",
        description="Robust green supplier selection and order allocation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a problem instance")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", help="generator config JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="run the two-step procedure")
    p.add_argument("--instance", required=True)
    p.add_argument("--report", required=True, help="output report JSON")
    p.add_argument("--report-csv", help="also write the flat CSV report")
    p.add_argument("--omega", type=float, default=None)
    p.add_argument("--lambda1", type=float, default=None)
    p.add_argument("--lambda2", type=float, default=None)
    _add_fidelity_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="one-parameter sensitivity sweep")
    p.add_argument("--param", required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--instance", required=True)
    p.add_argument("--out-csv", required=True)
    p.add_argument("--plot", help="optional SVG chart path")
    p.add_argument("--workers", type=int, default=_default_workers())
    _add_fidelity_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare-regimes",
                       help="cap-and-trade vs penalty regime")
    p.add_argument("--instance", required=True)
    p.add_argument("--caps", required=True,
                   help="comma-separated cap change factors")
    p.add_argument("--penalty-rate", type=float, default=None)
    p.add_argument("--out-csv", required=True)
    p.add_argument("--plot", help="optional SVG chart path")
    p.add_argument("--workers", type=int, default=_default_workers())
    _add_fidelity_flags(p)
    p.set_defaults(func=cmd_compare_regimes)

    p = sub.add_parser("export-mps", help="write a model in MPS format")
    p.add_argument("--instance", required=True)
    p.add_argument("--mode", required=True)
    p.add_argument("--report",
                   help="solve report supplying reference optima (combined)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_mps)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
