"""Command-line surface.

Subcommands: generate, validate, deploy, solve, evaluate, sweep, compare,
report. Exit codes: 0 success, 1 infeasible instance, 2 invalid input.
All outputs are deterministic for fixed inputs and seeds, except fields
named wall_time.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import evaluation, orchestrator
from .deployment import WkdConfig, wkd_deploy
from .evaluation import (CompareResult, ErrorDistribution, SweepResult,
                         SweepTemplate, compare_methods, csv_text,
                         monte_carlo_robustness, sweep)
from .offload_search import BwoaParams
from .orchestrator import (METHODS, ScenarioError, SolveParams, SolveReport,
                           derive_seed, solve)
from .scenario import (ScenarioFormatError, generate_scenario, load_scenario,
                       save_scenario, scenario_bytes, validate_scenario)

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_INVALID = 2

SWEEP_DEFAULT_OUT = {
    "tmax": "fig7_tmax_sweep.csv",
    "p_u": "fig8_pu_sweep.csv",
    "p_h": "fig9_ph_sweep.csv",
    "N": "fig5_n_sweep.csv",
    "M": "fig5_m_sweep.csv",
}


def _json_bytes(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_scenario_arg(path: str):
    scenario = load_scenario(path)
    problems = validate_scenario(scenario)
    if problems:
        raise ScenarioError("; ".join(problems))
    return scenario


def _solve_params(args) -> SolveParams:
    bwoa = BwoaParams(agents=args.agents, iters=args.iters)
    return SolveParams(seed=args.seed, bwoa=bwoa)


def _cmd_generate(args) -> int:
    scenario = generate_scenario(args.users, args.uavs, args.seed)
    if args.out:
        save_scenario(scenario, args.out)
    else:
        sys.stdout.write(scenario_bytes(scenario).decode())
    return EXIT_OK


def _cmd_validate(args) -> int:
    scenario = load_scenario(args.scenario)
    problems = validate_scenario(scenario)
    for p in problems:
        print(p)
    if problems:
        return EXIT_INVALID
    print("ok")
    return EXIT_OK


def _cmd_deploy(args) -> int:
    scenario = _load_scenario_arg(args.scenario)
    master = args.seed if args.seed is not None else scenario.rng_seed
    deployment = wkd_deploy(scenario,
                            config=WkdConfig(seed=derive_seed(master, 0)))
    _emit(_json_bytes(deployment.to_document()), args.out)
    return EXIT_OK


def _cmd_solve(args) -> int:
    scenario = _load_scenario_arg(args.scenario)
    report = solve(scenario, args.method, _solve_params(args))
    _emit(_json_bytes(report.to_document()), args.out)
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


def _cmd_evaluate(args) -> int:
    scenario = _load_scenario_arg(args.scenario)
    doc = json.loads(Path(args.report).read_text())
    report = SolveReport.from_document(doc)
    result = monte_carlo_robustness(report, scenario,
                                    ErrorDistribution(kind=args.dist),
                                    args.samples, args.seed or 0)
    if args.format == "csv":
        _emit(csv_text(result.CSV_COLUMNS, result.csv_rows()), args.out)
    else:
        _emit(_json_bytes(result.to_document()), args.out)
    return EXIT_OK


def _grid(args):
    start, stop, step = args.from_, args.to, args.step
    if step <= 0 or stop < start:
        raise ValueError("need --from <= --to and --step > 0")
    values = []
    v = start
    while v <= stop + 1e-12 * max(1.0, abs(stop)):
        values.append(round(v, 12))
        v += step
    return values


def _cmd_sweep(args) -> int:
    template = SweepTemplate(num_users=args.users, num_uavs=args.uavs)
    seeds = [int(args.seed or 0) + i for i in range(args.repeats)]
    result = sweep(template, args.param, _grid(args), seeds,
                   method=args.method, solve_params=_solve_params_for_sweep(args))
    out = args.out or SWEEP_DEFAULT_OUT[args.param]
    if args.format == "json":
        doc = {"param": result.param, "grid": list(result.grid),
               "columns": list(result.CSV_COLUMNS),
               "rows": [list(r) for r in result.rows],
               "summary": result.summary()}
        _emit(_json_bytes(doc), out if args.out else None)
    else:
        _emit(csv_text(result.CSV_COLUMNS, result.csv_rows()), out)
    return EXIT_OK


def _solve_params_for_sweep(args) -> SolveParams:
    return SolveParams(bwoa=BwoaParams(agents=args.agents, iters=args.iters))


def _cmd_compare(args) -> int:
    scenario = _load_scenario_arg(args.scenario)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method '{m}'")
    seeds = [int(args.seed or 0) + i for i in range(args.repeats)]
    result = compare_methods(scenario, methods, seeds,
                             solve_params=_solve_params_for_sweep(args))
    out = args.out or "fig4_method_compare.csv"
    if args.format == "json":
        doc = {"columns": list(result.CSV_COLUMNS),
               "rows": [list(r) for r in result.rows],
               "summary": result.summary()}
        _emit(_json_bytes(doc), out if args.out else None)
    else:
        _emit(csv_text(result.CSV_COLUMNS, result.csv_rows()), out)
    return EXIT_OK


def _cmd_report(args) -> int:
    doc = json.loads(Path(args.report).read_text())
    report = SolveReport.from_document(doc)
    summary = {
        "method": report.method,
        "seed": report.seed,
        "scenario_digest": report.scenario_digest,
        "objective": report.objective,
        "fitness": report.fitness,
        "feasible": report.feasible,
        "served": report.served,
        "shed_tasks": list(report.shed_tasks),
        "infeasible_tasks": list(report.infeasible_tasks),
        "rounds": len(report.trace),
        "wall_time": report.wall_time,
    }
    if args.format == "csv":
        columns = ("method", "seed", "objective", "fitness", "feasible",
                   "served", "wall_time")
        row = [(report.method, report.seed, float(report.objective),
                float(report.fitness), int(report.feasible),
                int(report.served), float(report.wall_time))]
        _emit(csv_text(columns, row), args.out)
    else:
        _emit(_json_bytes(summary), args.out)
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aerialmec",
        description="Robust planner/simulator for a UAV + HAP edge network")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, scenario=False, out=True, seed=True, fmt=None):
        if scenario:
            p.add_argument("--scenario", required=True, help="scenario JSON path")
        if out:
            p.add_argument("--out", default=None, help="output path (default stdout)")
        if seed:
            p.add_argument("--seed", type=int, default=None, help="64-bit seed")
        if fmt:
            p.add_argument("--format", choices=("json", "csv"), default=fmt)

    p = sub.add_parser("generate", help="generate a seeded scenario")
    p.add_argument("--users", type=int, default=30)
    p.add_argument("--uavs", type=int, default=6)
    common(p)
    p.set_defaults(func=_cmd_generate)
    p.set_defaults(seed=42)

    p = sub.add_parser("validate", help="check a scenario's invariants")
    common(p, scenario=True, out=False, seed=False)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("deploy", help="place UAVs and connect users")
    common(p, scenario=True)
    p.set_defaults(func=_cmd_deploy)

    p = sub.add_parser("solve", help="run the full pipeline")
    common(p, scenario=True)
    p.add_argument("--method", choices=METHODS, default="bwoa")
    p.add_argument("--agents", type=int, default=30)
    p.add_argument("--iters", type=int, default=200)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("evaluate", help="Monte Carlo robustness of a solve report")
    common(p, scenario=True, fmt="json")
    p.add_argument("--report", required=True, help="solve-report JSON path")
    p.add_argument("--dist", choices=evaluation.DIST_KINDS, default="gaussian")
    p.add_argument("--samples", type=int, default=10000)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("sweep", help="parameter sweep over seeded instances")
    common(p, fmt="csv")
    p.add_argument("--param", choices=evaluation.SWEEP_PARAMS, required=True)
    p.add_argument("--from", dest="from_", type=float, required=True)
    p.add_argument("--to", type=float, required=True)
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--repeats", type=int, default=20)
    p.add_argument("--method", choices=METHODS, default="bwoa")
    p.add_argument("--users", type=int, default=30)
    p.add_argument("--uavs", type=int, default=6)
    p.add_argument("--agents", type=int, default=30)
    p.add_argument("--iters", type=int, default=200)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("compare", help="objective/time per method per seed")
    common(p, scenario=True, fmt="csv")
    p.add_argument("--methods", default="bwoa,greedy,sa")
    p.add_argument("--repeats", type=int, default=20)
    p.add_argument("--agents", type=int, default=30)
    p.add_argument("--iters", type=int, default=200)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("report", help="summarize a solve report")
    common(p, out=True, seed=False, fmt="json")
    p.add_argument("--report", required=True, help="solve-report JSON path")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ScenarioFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except json.JSONDecodeError as exc:
        print(f"error: malformed JSON input ({exc})", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
