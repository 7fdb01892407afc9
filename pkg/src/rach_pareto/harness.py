"""Experiment drivers behind the command line: curves, Pareto maps, sweeps, validation."""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import asdict, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .analytic import (
    ContentionConfig,
    ResourceCosts,
    evaluate_grid,
    expected_consumption,
    expected_idle,
    throughput,
)
from .errors import CapExceededError, InfeasibleError, RachError
from .optimizer import (
    ResourceBudget,
    acb_policy,
    best_acb_allocation,
    pareto_frontier,
    poca,
)
from .oracle import DEFAULT_OUTCOME_CAP, exact_expectations, make_rng, outcome_count, sample_means
from .simulator import CONTROLLERS, ScenarioConfig, run_burst, run_replications

SCHEMA_VERSION = 1
DEFAULT_N_LIST = (1000, 2000, 3000, 4000, 5000)


class OutputError(RachError, OSError):
    pass


# -- output -------------------------------------------------------------------

def render_csv(schema: str, rows: Sequence[dict], timestamp: bool = True) -> str:
    """CSV text with a schema comment line and an optional timestamp line."""
    buf = io.StringIO()
    buf.write(f"# schema: rach_pareto.{schema}/v{SCHEMA_VERSION}\n")
    if timestamp:
        buf.write(f"# generated: {datetime.now(timezone.utc).isoformat(timespec='seconds')}\n")
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return buf.getvalue()


def render_json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def write_text(path: str | Path | None, text: str) -> None:
    """Write to ``path``, or stdout when ``path`` is None or ``-``."""
    if path is None or str(path) == "-":
        print(text, end="")
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


# -- analyze ------------------------------------------------------------------

def cmd_analyze(n: float, M_list: Iterable[int], p_grid: Sequence[float],
                costs: ResourceCosts) -> list[dict]:
    """Throughput, consumption and efficiency curves over ``p`` for each ``M``.

    The rows where ``S`` and ``T`` peak are flagged.
    """
    p = np.asarray(p_grid, dtype=float)
    rows = []
    for M in M_list:
        S, _, R = evaluate_grid(n, p, M, costs)
        T = S / R
        iS, iT = int(np.argmax(S)), int(np.argmax(T))
        for i in range(p.size):
            rows.append({"M": int(M), "p": float(p[i]), "S": float(S[i]), "T": float(T[i]),
                         "R": float(R[i]), "argmax_S": i == iS, "argmax_T": i == iT})
    return rows


# -- pareto -------------------------------------------------------------------

def cmd_pareto(n: float, costs: ResourceCosts, p_grid: Sequence[float],
               M_values: Sequence[int]) -> list[dict]:
    """Grid points with frontier flags, plus the ``p = min(1, M/n)`` point of each ``M``.

    A policy point's ``on_frontier`` is true when no grid point dominates it.
    """
    points = pareto_frontier(n, costs, p_grid, M_values)
    rows = [{"kind": "grid", **asdict(pt)} for pt in points]
    S_grid = np.array([pt.S for pt in points])
    R_grid = np.array([pt.R for pt in points])
    for M in M_values:
        p = acb_policy(n, M)
        S, _, R = evaluate_grid(n, p, M, costs)
        S, R = float(S), float(R)
        dominated = bool(np.any((S_grid >= S) & (R_grid <= R) & ((S_grid > S) | (R_grid < R))))
        rows.append({"kind": "acb", "p": p, "M": int(M), "S": S, "R": R,
                     "on_frontier": not dominated})
    return rows


# -- optimize -----------------------------------------------------------------

def cmd_optimize(n: float, costs: ResourceCosts, budget: ResourceBudget,
                 method: str = "poca") -> dict:
    n = max(n, 1.0)
    if method == "poca":
        decision = poca(n, costs, budget)
    elif method == "duan16-d":
        decision = best_acb_allocation(n, costs, budget)
    else:
        raise InfeasibleError(f"unknown optimisation method {method!r}")
    return {"method": method, "n": n, "r_bar": budget.r_bar,
            "granularity_m": budget.granularity_m, **asdict(decision)}


# -- simulate / compare -------------------------------------------------------

def round_rows(result, replication: int) -> list[dict]:
    return [{
        "replication": replication,
        "round": rec.round_index,
        "p": rec.decision.p,
        "M": rec.decision.M,
        "predicted_S": rec.decision.predicted_S,
        "predicted_R": rec.decision.predicted_R,
        "m_C": rec.split.m_C,
        "m_S": rec.split.m_S,
        "m_I": rec.split.m_I,
        "successes": rec.successes,
        "consumed": rec.consumed,
        "backlog_true": rec.backlog_true,
        "backlog_estimate": rec.backlog_estimate,
    } for rec in result.rounds]


def burst_summary(result) -> dict:
    return {"resolution_rounds": result.resolution_rounds,
            "resolution_time": result.resolution_time,
            "avg_throughput": result.avg_throughput,
            "avg_consumption": result.avg_consumption}


def cmd_simulate(config: ScenarioConfig, seed: int) -> tuple[list[dict], list[dict]]:
    """Per-round rows and per-replication summaries for one scenario."""
    rows, summaries = [], []
    for rep in range(config.replications):
        result = run_burst(config, seed=seed, replication_index=rep)
        rows.extend(round_rows(result, rep))
        summaries.append({"replication": rep, **burst_summary(result)})
    return rows, summaries


def analytic_throughput_table(n: float, costs: ResourceCosts, r_bar_grid: Sequence[float],
                              controllers: Sequence[str] = CONTROLLERS,
                              M_fixed: int = 54, granularity_m: int = 1) -> list[dict]:
    """Predicted throughput of each policy at backlog ``n`` over a budget grid."""
    rows = []
    for r_bar in r_bar_grid:
        budget = ResourceBudget(float(r_bar), granularity_m)
        row: dict = {"r_bar": float(r_bar)}
        for name in controllers:
            try:
                if name == "poca":
                    row[name] = poca(n, costs, budget).predicted_S
                elif name == "duan16-d":
                    row[name] = best_acb_allocation(n, costs, budget).predicted_S
                else:
                    # fixed-M benchmarks run with a budget high enough to stay feasible
                    S, _, _ = evaluate_grid(n, acb_policy(n, M_fixed), M_fixed, costs)
                    row[name] = float(S)
            except InfeasibleError:
                row[name] = None
        rows.append(row)
    return rows


def cmd_compare(base: ScenarioConfig, N_list: Sequence[int], controllers: Sequence[str],
                replications: int, seed: int, table_n: float = 2000.0,
                r_bar_grid: Sequence[float] = tuple(range(20, 81, 5))) -> tuple[dict, list[dict]]:
    """Benchmark sweep over burst sizes and controllers, plus the analytic budget table.

    Every ``(N, controller)`` cell uses the same seed streams, so controllers
    face identical activation times. Infeasible cells are recorded, not fatal.
    """
    cells = []
    bursts = []
    for N, name in itertools.product(N_list, controllers):
        config = replace(base, N=int(N), controller=name, replications=replications,
                         master_seed=seed)
        cell: dict = {"N": int(N), "controller": name}
        try:
            summary = run_replications(config)
        except InfeasibleError as exc:
            cell.update(status="infeasible", reason=str(exc))
            cells.append(cell)
            continue
        if summary.infeasible:
            cell.update(status="infeasible", reason=summary.infeasible)
            cells.append(cell)
            continue
        cell["status"] = "ok"
        cell["completed"] = len(summary.results)
        cell["aborted"] = summary.aborted
        for attr in ("resolution_rounds", "resolution_time", "avg_throughput", "avg_consumption"):
            mean, se = summary.stat(attr)
            cell[attr] = {"mean": mean, "se": se}
        cells.append(cell)
        for rep, result in enumerate(summary.results):
            bursts.append({"N": int(N), "controller": name, "replication": rep,
                           **burst_summary(result)})
    payload = {
        "schema": f"rach_pareto.compare/v{SCHEMA_VERSION}",
        "seed": seed,
        "replications": replications,
        "scenario": {
            "activation_window": base.activation_window,
            "round_period": base.round_period,
            "r_I": base.costs.r_I,
            "r_O": base.costs.r_O,
            "r_bar": base.budget.r_bar,
            "granularity_m": base.budget.granularity_m,
            "M_fixed": base.M_fixed,
            "arrival_profile": base.arrival_profile,
        },
        "cells": cells,
        "throughput_vs_budget": {
            "n": table_n,
            "rows": analytic_throughput_table(table_n, base.costs, r_bar_grid, controllers,
                                              base.M_fixed, base.budget.granularity_m),
        },
    }
    return payload, bursts


# -- validate -----------------------------------------------------------------

def _rel_err(a: float, b: float) -> float:
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b))


def cmd_validate(cap: int = DEFAULT_OUTCOME_CAP, tolerance: float = 4.0, seed: int = 0,
                 exact_rtol: float = 1e-12, n_max: int = 6, M_max: int = 4,
                 p_values: Sequence[float] = (0.25, 0.5, 1.0), mc_rounds: int = 10**5,
                 mc_point: tuple[int, float, int] = (400, 0.135, 54),
                 costs: ResourceCosts | None = None) -> dict:
    """Compare the closed forms with exact enumeration and Monte Carlo.

    ``cap`` bounds the enumerated outcome space; instances above it are
    skipped. ``tolerance`` is the Monte Carlo bound in standard errors and
    0 selects exact-only mode.
    """
    costs = costs or ResourceCosts()
    exact = []
    for n, M, p in itertools.product(range(n_max + 1), range(1, M_max + 1), p_values):
        if outcome_count(n, M) > cap:
            continue
        try:
            E_s, E_idle, E_r = exact_expectations(n, p, M, costs, cap)
        except CapExceededError:
            continue
        cfg = ContentionConfig(n, p, M)
        S = throughput(cfg) if n >= 1 else 0.0
        errs = {"S": _rel_err(S, E_s), "m_I": _rel_err(expected_idle(cfg), E_idle),
                "R": _rel_err(expected_consumption(cfg, costs), E_r)}
        worst = max(errs.values())
        exact.append({"n": n, "M": M, "p": p, "max_rel_err": worst, "pass": worst <= exact_rtol})

    monte_carlo = []
    if tolerance > 0 and mc_rounds > 1:
        n, p, M = mc_point
        means = sample_means(n, p, M, costs, mc_rounds, make_rng(seed, 0))
        S, E_idle_cf, R = (float(x) for x in evaluate_grid(n, p, M, costs))
        for name, closed in (("s", S), ("m_I", E_idle_cf), ("r", R)):
            mean, se = means[name]
            z = abs(mean - closed) / se if se > 0 else (0.0 if mean == closed else math.inf)
            monte_carlo.append({"quantity": name, "n": n, "p": p, "M": M, "closed_form": closed,
                                "sample_mean": mean, "se": se, "z": z, "pass": z <= tolerance})
    exact.sort(key=lambda row: -row["max_rel_err"])
    ok = all(r["pass"] for r in exact) and all(r["pass"] for r in monte_carlo)
    return {"ok": ok, "exact_checked": len(exact), "exact_worst": exact[:5],
            "exact_failures": [r for r in exact if not r["pass"]], "monte_carlo": monte_carlo}
