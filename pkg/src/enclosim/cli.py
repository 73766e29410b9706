"""Command line front end: run scenarios, inspect envelopes, verify claims.

Exit codes: 0 for a clean outcome, 1 for configuration or validation
problems, 2 for a run that tripped a constraint. The run command always
leaves its trace and report behind, violation or not, so failures can be
inspected offline.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace as dc_replace
from pathlib import Path
from time import perf_counter

import numpy as np
import yaml

from .errors import EnclosimError, InitialConditionViolation
from .formation import check_feasibility
from .plots import save_report_figures
from .scenario_io import apply_env_overrides, resolve_scenario, write_scenario
from .sim import check_initial_state
from .sim import metrics as compute_metrics
from .sim import monitor as run_monitor
from .sim import run, scenario_envelope
from .trace_io import write_trace
from .verification import criterion_names, format_result, run_criteria

EXIT_CLEAN = 0
EXIT_INVALID = 1
EXIT_VIOLATION = 2


def _cmd_run(args) -> int:
    scenario = resolve_scenario(args.scenario)
    scenario, overrides = apply_env_overrides(scenario)
    if args.full_rate:
        scenario = dc_replace(scenario, log_decimation=1)
    want_plots = scenario.emit_plots or args.plots
    outdir = Path(args.out) if args.out else Path(f"{scenario.name}_out")
    outdir.mkdir(parents=True, exist_ok=True)

    t0 = perf_counter()
    trace = run(scenario)
    wall = perf_counter() - t0
    report = run_monitor(trace)
    summary = compute_metrics(trace)

    write_trace(trace, outdir / "trace.csv")
    write_scenario(scenario, outdir / "scenario_echo.yaml")
    written = ["trace.csv", "scenario_echo.yaml", "summary.yaml"]
    if want_plots:
        written += [p.name for p in save_report_figures(trace, outdir)]

    clean = trace.completed and report.ok
    payload = {
        "scenario": scenario.name,
        "completed": bool(trace.completed),
        "violation": report.violation,
        "records": int(trace.n_records),
        "simulated_seconds": float(trace.t[-1]),
        "wall_seconds": round(wall, 4),
        "overrides": overrides,
        "monitor": {
            "ok": bool(report.ok),
            "checks": {
                c.name: {"ok": bool(c.ok), "worst_margin": float(c.worst_margin),
                         "first_bad_index": c.first_bad_index}
                for c in report.checks
            },
        },
        "metrics": summary.to_mapping(),
        "outputs": written,
    }
    with open(outdir / "summary.yaml", "w") as fh:
        yaml.safe_dump(payload, fh, sort_keys=False)

    status = "clean" if clean else f"violated ({report.violation})" if not trace.completed \
        else "monitor check failed"
    print(f"{scenario.name}: {trace.n_records} records over {trace.t[-1]:.2f} s "
          f"simulated in {wall:.2f} s, {status}")
    for c in report.checks:
        print(f"  {c.name}: {'ok' if c.ok else 'VIOLATED'} (worst margin {c.worst_margin:.3g})")
    print(f"  outputs in {outdir}/: " + ", ".join(written))
    return EXIT_CLEAN if clean else EXIT_VIOLATION


def _cmd_check(args) -> int:
    scenario = resolve_scenario(args.scenario)
    envelope = scenario_envelope(scenario)
    feas = check_feasibility(scenario.spec, scenario.ranges)
    edges = scenario.spec.graph.edges
    print(f"{scenario.name}: {scenario.spec.n_agents} agents, {len(edges)} edges")
    print(f"{'edge':>8} {'d*':>8} {'window':>17} {'funnel':>19}")
    for k, (i, j) in enumerate(edges):
        window = f"[{envelope.d_lower[k]:.2f}, {envelope.d_upper[k]:.2f}]"
        funnel = f"(-{envelope.e_lower_star[k]:.3f}, +{envelope.e_upper_star[k]:.3f})"
        print(f"  ({i},{j}) {envelope.d_star[k]:8.4f} {window:>17} {funnel:>19}")
    problems = [issue.message for issue in feas.issues]
    try:
        check_initial_state(scenario, envelope)
    except InitialConditionViolation as exc:
        problems.append(str(exc))
    if problems:
        for p in problems:
            print(f"  problem: {p}")
        return EXIT_INVALID
    print("  feasible, initial state inside every funnel and heading bound")
    return EXIT_CLEAN


def _cmd_verify(args) -> int:
    out_dir = Path(args.out) if args.out else Path("verify_artifacts")
    names = [args.filter] if args.filter else None
    results = run_criteria(names=names, out_dir=out_dir)
    for r in results:
        print(format_result(r))
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} criteria passed")
    return EXIT_CLEAN if n_pass == len(results) else EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="enclosim",
        description="Deterministic target-enclosure simulations for unicycle teams.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate a scenario and write its report")
    p_run.add_argument("scenario", help="scenario file path or bundled scenario name")
    p_run.add_argument("--out", help="output directory (default <name>_out)")
    p_run.add_argument("--plots", action="store_true",
                       help="render figures even if the scenario does not ask for them")
    p_run.add_argument("--full-rate", action="store_true",
                       help="log every integration step instead of the scenario decimation")
    p_run.set_defaults(handler=_cmd_run)

    p_check = sub.add_parser("check", help="print the constraint envelope of a scenario")
    p_check.add_argument("scenario", help="scenario file path or bundled scenario name")
    p_check.set_defaults(handler=_cmd_check)

    p_verify = sub.add_parser("verify", help="run the acceptance criteria")
    p_verify.add_argument("--filter", help="run only criteria whose name contains this string",
                          metavar="|".join(criterion_names()[:2]) + "|...")
    p_verify.add_argument("--out", help="directory for counterexample archives "
                                        "(default verify_artifacts, created only when needed)")
    p_verify.set_defaults(handler=_cmd_verify)
    return parser


def main(argv=None) -> int:
    np.set_printoptions(precision=6, suppress=True)
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except EnclosimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
