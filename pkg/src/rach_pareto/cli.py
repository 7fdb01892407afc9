"""Command line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 validation
failure, 3 infeasible scenario.
"""
from __future__ import annotations

import argparse
import sys
from typing import Any, Callable

import numpy as np
import yaml

from . import harness
from .analytic import ResourceCosts
from .errors import ConfigError, DomainError, InfeasibleError, NonTerminationError
from .optimizer import ResourceBudget
from .simulator import CONTROLLERS, ScenarioConfig

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_INFEASIBLE = 0, 1, 2, 3


def _bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _list_of(cast: Callable) -> Callable:
    """Parse ``a,b,c`` or an inclusive ``start:stop[:step]`` range (or a YAML list)."""
    def parse(value: Any) -> list:
        if isinstance(value, (list, tuple)):
            return [cast(v) for v in value]
        text = str(value).strip()
        if ":" in text:
            parts = [cast(x) for x in text.split(":")]
            start, stop = parts[0], parts[1]
            step = parts[2] if len(parts) > 2 else cast(1)
            return [cast(x) for x in np.arange(start, stop + step / 2, step)]
        return [cast(x) for x in text.split(",") if x.strip()]
    return parse


def _controllers(value: Any) -> list[str]:
    names = _list_of(str)(value)
    unknown = [c for c in names if c not in CONTROLLERS]
    if unknown:
        raise ValueError(f"unknown controllers {unknown}; choose from {list(CONTROLLERS)}")
    return names


_COSTS = {"r_I": (float, 0.09), "r_O": (float, 1.09)}
_BUDGET = {"r_bar": (float, 50.0), "granularity_m": (int, 1)}
_SCENARIO = {
    **_COSTS, **_BUDGET,
    "activation_window": (float, 10.0),
    "round_period": (float, 5.0),
    "M_fixed": (int, 54),
    "fixed_budget_high": (_bool, True),
    "arrival_profile": (str, "uniform"),
    "round_cap": (int, 10**5),
    "initial_n_hat": (float, 0.0),
    "perfect_estimator": (_bool, False),
}

PARAMS: dict[str, dict[str, tuple[Callable, Any]]] = {
    "analyze": {"n": (float, 400.0), "M_list": (_list_of(int), [10, 30, 54]),
                "p_points": (int, 1000), **_COSTS},
    "pareto": {"n": (float, 400.0), "M_values": (_list_of(int), list(range(10, 61))),
               "p_points": (int, 200), **_COSTS},
    "optimize": {"n": (float, 400.0), "method": (str, "poca"), **_COSTS, **_BUDGET},
    "simulate": {"N": (int, 1000), "controller": (str, "poca"), **_SCENARIO},
    "compare": {"N_list": (_list_of(int), list(harness.DEFAULT_N_LIST)),
                "controllers": (_controllers, list(CONTROLLERS)),
                "table_n": (float, 2000.0),
                "r_bar_grid": (_list_of(float), [float(x) for x in range(20, 81, 5)]),
                **_SCENARIO},
    "validate": {"cap": (int, 10**7), "tolerance": (float, 4.0), "exact_rtol": (float, 1e-12),
                 "mc_rounds": (int, 10**5)},
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rach-pareto", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for command, params in PARAMS.items():
        p = sub.add_parser(command)
        p.add_argument("--config", help="flat YAML key-value file with command parameters")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--no-timestamp", action="store_true",
                       help="omit the generated-at header line from CSV output")
        if command in ("simulate", "compare"):
            p.add_argument("--reps", type=int, default=None)
        if command == "simulate":
            p.add_argument("--summary-out", default=None, help="JSON per-replication summary")
        if command == "compare":
            p.add_argument("--bursts-out", default=None, help="per-burst CSV")
        for key in params:
            p.add_argument("--" + key.replace("_", "-"), dest=key, default=None)
    return parser


def load_config(path: str | None, command: str) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a flat key-value mapping")
    allowed = set(PARAMS[command]) | {"seed", "reps"}
    for key, value in data.items():
        if key not in allowed:
            raise ConfigError(f"unknown config key {key!r} for {command}")
        if isinstance(value, dict):
            raise ConfigError(f"config key {key!r} must not be nested")
    return data


def resolve_params(args: argparse.Namespace, config: dict) -> dict:
    """Defaults, overridden by the config file, overridden by flags."""
    out = {}
    for key, (cast, default) in PARAMS[args.command].items():
        raw = getattr(args, key)
        if raw is None:
            raw = config.get(key, default)
        try:
            out[key] = cast(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc
    return out


def _costs(params) -> ResourceCosts:
    return ResourceCosts(params["r_I"], params["r_O"])


def _scenario(params, replications: int, seed: int) -> ScenarioConfig:
    return ScenarioConfig(
        N=params.get("N", 1),
        controller=params.get("controller", "poca"),
        activation_window=params["activation_window"],
        round_period=params["round_period"],
        costs=_costs(params),
        budget=ResourceBudget(params["r_bar"], params["granularity_m"]),
        M_fixed=params["M_fixed"],
        fixed_budget_high=params["fixed_budget_high"],
        arrival_profile=params["arrival_profile"],
        master_seed=seed,
        replications=replications,
        round_cap=params["round_cap"],
        initial_n_hat=params["initial_n_hat"],
        perfect_estimator=params["perfect_estimator"],
    )


def _emit(args, schema: str, rows, default_format: str = "csv") -> None:
    fmt = args.format or default_format
    text = harness.render_json(rows) if fmt == "json" else \
        harness.render_csv(schema, rows, timestamp=not args.no_timestamp)
    harness.write_text(args.out, text)


def run(args: argparse.Namespace) -> int:
    config = load_config(args.config, args.command)
    params = resolve_params(args, config)
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    reps = getattr(args, "reps", None)
    reps = reps if reps is not None else int(config.get("reps", 1))

    if args.command == "analyze":
        p_grid = np.linspace(1.0 / params["p_points"], 1.0, params["p_points"])
        rows = harness.cmd_analyze(params["n"], params["M_list"], p_grid, _costs(params))
        _emit(args, "analyze", rows)
    elif args.command == "pareto":
        p_grid = np.linspace(1.0 / params["p_points"], 1.0, params["p_points"])
        rows = harness.cmd_pareto(params["n"], _costs(params), p_grid, params["M_values"])
        _emit(args, "pareto", rows)
    elif args.command == "optimize":
        budget = ResourceBudget(params["r_bar"], params["granularity_m"])
        result = harness.cmd_optimize(params["n"], _costs(params), budget, params["method"])
        _emit(args, "optimize", [result], default_format="json")
    elif args.command == "simulate":
        scenario = _scenario(params, reps, seed)
        rows, summaries = harness.cmd_simulate(scenario, seed)
        _emit(args, "simulate", rows)
        if args.summary_out:
            harness.write_text(args.summary_out, harness.render_json(summaries))
    elif args.command == "compare":
        scenario = _scenario(params, reps, seed)
        payload, bursts = harness.cmd_compare(
            scenario, params["N_list"], params["controllers"], reps, seed,
            table_n=params["table_n"], r_bar_grid=params["r_bar_grid"])
        harness.write_text(args.out, harness.render_json(payload))
        if args.bursts_out:
            harness.write_text(args.bursts_out, harness.render_csv(
                "compare_bursts", bursts, timestamp=not args.no_timestamp))
    elif args.command == "validate":
        report = harness.cmd_validate(cap=params["cap"], tolerance=params["tolerance"],
                                      seed=seed, exact_rtol=params["exact_rtol"],
                                      mc_rounds=params["mc_rounds"])
        harness.write_text(args.out, harness.render_json(report))
        if not report["ok"]:
            return EXIT_VALIDATION
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NonTerminationError as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, DomainError, harness.OutputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
