"""Batch front end: solve, check invariance, evaluate and verify conserved
quantities, write CSV data and a run report.

Exit codes: 0 all requested verdicts pass, 2 a verdict failed,
1 input or runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import _accel, catalog
from . import expressions as ex
from .config import ConfigError, ProblemConfig, dump_config, parse_config
from .engine import (
    Extremal,
    UnsupportedProblemError,
    VariationalProblem,
    delayed_el_residual,
    solve_extremal,
)
from .noether import check_invariance, conservation_check, conserved_quantity

STAGES = ("solve", "invariance", "noether", "conservation")


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def _resolve_config(source: str) -> tuple[str, str, str]:
    """Return (label, config text, notes) from a path or a catalog name."""
    if os.path.exists(source):
        with open(source, "r", encoding="utf-8") as fh:
            return source, fh.read(), ""
    if source in catalog.names():
        e = catalog.entry(source)
        return e.name, e.config_text, e.notes
    raise ConfigError(f"no such config file or catalog entry: {source!r}")


def _write_extremal_csv(path: str, levels: np.ndarray, extremal: Extremal) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("r,x,q_lower,q_upper,v_lower,v_upper\n")
        for li, r in enumerate(levels):
            for j, x in enumerate(extremal.xs):
                fh.write(
                    f"{_fmt(r)},{_fmt(x)},{_fmt(extremal.q_lower[li, j])},"
                    f"{_fmt(extremal.q_upper[li, j])},{_fmt(extremal.v_lower[li, j])},"
                    f"{_fmt(extremal.v_upper[li, j])}\n"
                )


def _write_conserved_csv(path: str, levels: np.ndarray, report) -> None:
    xs, c_lower, c_upper = report.nodewise()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("r,x,C_lower,C_upper\n")
        for li, r in enumerate(levels):
            for j, x in enumerate(xs):
                fh.write(
                    f"{_fmt(r)},{_fmt(x)},{_fmt(c_lower[li, j])},{_fmt(c_upper[li, j])}\n"
                )


def _solve_stage(cfg: ProblemConfig, problem: VariationalProblem):
    """Solve the stationarity system; delayed problems go through a
    delay-stripped twin (sound only for delay-free integrands, where the
    delayed and plain systems coincide) and get delayed velocities attached."""
    if not problem.is_delayed:
        return solve_extremal(problem)
    if problem.lagrangian.delayed:
        raise UnsupportedProblemError(
            "solving is unsupported for integrands with delayed velocities; "
            "the delayed path evaluates residuals along given trajectories only"
        )
    twin = VariationalProblem(
        a=problem.a,
        b=problem.b,
        grid=problem.grid,
        xs=problem.xs,
        lagrangian=problem.lagrangian,
        bc_a=problem.bc_a,
        bc_b=problem.bc_b,
        delay=None,
    )
    solved, diagnostics = solve_extremal(twin)
    return Extremal.build(problem, solved.q_lower, solved.q_upper), diagnostics


def run(args) -> int:
    label, text, notes = _resolve_config(args.config)
    cfg = parse_config(text)
    if args.nodes is not None:
        cfg.nodes = args.nodes
    if args.levels is not None:
        cfg.levels = args.levels
    if args.dump_config:
        sys.stdout.write(dump_config(cfg))
        return 0

    requested = []
    for name in (args.stages or ",".join(STAGES)).split(","):
        name = name.strip()
        if name not in STAGES:
            raise ConfigError(f"unknown stage {name!r}; stages: {', '.join(STAGES)}")
        if name not in requested:
            requested.append(name)
    want = set(requested)
    run_noether = bool(want & {"noether", "conservation"})

    problem, generator = cfg.build()
    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)

    report_lines = [
        "fuzzyvar run report",
        "===================",
        f"config: {label}",
        f"backend: {_accel.BACKEND}",
        f"interval: [{_fmt(cfg.a)}, {_fmt(cfg.b)}]   nodes: {cfg.nodes}   levels: {cfg.levels}",
        f"L_lower = {ex.to_text(cfg.l_lower)}",
        f"L_upper = {ex.to_text(cfg.l_upper)}",
        "generator: "
        + (f"tau = {ex.to_text(cfg.tau)}   " if cfg.tau is not None else "")
        + f"zeta_lower = {ex.to_text(cfg.zeta_lower)}   zeta_upper = {ex.to_text(cfg.zeta_upper)}",
    ]
    if cfg.is_delayed:
        report_lines.append(
            f"delay: tau_d = {_fmt(cfg.tau_d)}   psi_lower = {ex.to_text(cfg.psi_lower)}"
            f"   psi_upper = {ex.to_text(cfg.psi_upper)}"
        )
    report_lines.append("")

    summary = {
        "config": label,
        "backend": _accel.BACKEND,
        "stages": {name: {"run": False} for name in STAGES},
        "files": [],
    }
    verdict_failures: list[str] = []

    # solving always runs: every later stage evaluates along the extremal
    extremal, diagnostics = _solve_stage(cfg, problem)
    if not diagnostics.converged:
        worst = next(info for info in diagnostics.levels if not info.converged)
        raise UnsupportedProblemError(
            f"solver did not converge at level r={worst.level:g} "
            f"after {worst.iterations} iterations: {worst.message or 'no progress'}"
        )
    max_residual = max(info.max_residual for info in diagnostics.levels)
    solve_line = (
        f"stage solve: converged={diagnostics.converged} "
        f"consistent={diagnostics.consistent} fuzzy_valid={diagnostics.fuzzy_valid} "
        f"max_residual={max_residual:.3e}"
    )
    delayed_residual_max = None
    if problem.is_delayed:
        delayed_report = delayed_el_residual(problem, extremal)
        delayed_residual_max = max(
            delayed_report.early.max_residual(), delayed_report.late.max_residual()
        )
        solve_line += f" delayed_residual_max={delayed_residual_max:.3e}"
    report_lines.append(solve_line)
    if diagnostics.fuzzy_violation:
        report_lines.append(f"  level-family violation: {diagnostics.fuzzy_violation}")
    summary["stages"]["solve"] = {
        "run": True,
        "converged": diagnostics.converged,
        "consistent": diagnostics.consistent,
        "fuzzy_valid": diagnostics.fuzzy_valid,
        "max_residual": max_residual,
        "delayed_residual_max": delayed_residual_max,
        "per_level": [
            {
                "level": info.level,
                "iterations": info.iterations,
                "max_residual": info.max_residual,
                "tol_consistent": info.tol_consistent,
                "consistent": info.consistent,
            }
            for info in diagnostics.levels
        ],
    }

    extremal_csv = os.path.join(out_dir, "extremal.csv")
    _write_extremal_csv(extremal_csv, problem.grid.levels, extremal)
    summary["files"].append("extremal.csv")

    if "invariance" in want:
        inv = check_invariance(problem, generator, extremal, slope_tol=cfg.slope_tol)
        line = f"stage invariance: invariant={inv.invariant}"
        finite_slope = inv.min_slope()
        if np.isfinite(finite_slope):
            line += f" min_slope={finite_slope:.3f} threshold={inv.slope_threshold:.2f}"
        else:
            line += " (defects below the exactness floor at every group parameter)"
        report_lines.append(line)
        for failure in inv.failures:
            report_lines.append(f"  failed slope fit: {failure}")
        for note in inv.skipped:
            report_lines.append(f"  skipped: {note}")
        summary["stages"]["invariance"] = {
            "run": True,
            "invariant": inv.invariant,
            "min_slope": finite_slope if np.isfinite(finite_slope) else None,
            "threshold": inv.slope_threshold,
            "failures": inv.failures,
        }
        if args.require_invariance and not inv.invariant:
            verdict_failures.append("invariance")

    if run_noether:
        conserved = conserved_quantity(
            problem,
            generator,
            extremal,
            delayed_upper="literal" if args.literal_delayed_noether else "symmetric",
            tol_cons=cfg.tol_cons,
            tol_span=cfg.tol_span,
        )
        formula = (
            "delayed two-regime"
            if problem.is_delayed
            else ("general (with time transformation)" if cfg.tau is not None else "without time transformation")
        )
        report_lines.append(f"stage noether: formula={formula}")
        if problem.is_delayed:
            report_lines.append(
                f"  upper-bound advanced pairing: "
                f"{'literal' if args.literal_delayed_noether else 'symmetric'}"
            )
        summary["stages"]["noether"] = {"run": True, "formula": formula}
        conserved_csv = os.path.join(out_dir, "conserved.csv")
        _write_conserved_csv(conserved_csv, problem.grid.levels, conserved)
        summary["files"].append("conserved.csv")

        if "conservation" in want:
            verdict = conservation_check(conserved)
            report_lines.append(
                f"stage conservation: verdict={verdict.ok} "
                f"max|dC/dx|={conserved.max_drift:.3e} (tol {conserved.tol_cons:g}) "
                f"rel_span={conserved.max_rel_span:.3e} (tol {conserved.tol_span:g})"
            )
            report_lines.append(
                f"  worst drift: level r={verdict.level:g} x={_fmt(verdict.x)} "
                f"{verdict.side} side"
                + (f" ({verdict.segment})" if verdict.segment else "")
            )
            summary["stages"]["conservation"] = {
                "run": True,
                "verdict": verdict.ok,
                "max_drift": conserved.max_drift,
                "max_rel_span": conserved.max_rel_span,
                "tol_cons": conserved.tol_cons,
                "tol_span": conserved.tol_span,
                "worst": {
                    "level": verdict.level,
                    "x": verdict.x,
                    "side": verdict.side,
                    "segment": verdict.segment,
                },
            }
            if not verdict.ok:
                verdict_failures.append("conservation")

    exit_code = 2 if verdict_failures else 0
    if notes:
        report_lines += ["", f"notes: {notes}"]
    summary["files"] += ["report.txt", "report.json"]
    summary["exit_status"] = exit_code
    if verdict_failures:
        report_lines.append(f"failed verdicts: {', '.join(verdict_failures)}")
    report_lines += ["", f"files: {' '.join(summary['files'])}", f"exit: {exit_code}"]

    with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(report_lines) + "\n")
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")

    for line in report_lines:
        print(line)
    return exit_code


def list_catalog() -> int:
    for name in catalog.names():
        print(f"{name}: {catalog.entry(name).description}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fuzzyvar",
        description="solve fuzzy variational problems and verify conserved quantities",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run a configuration file or catalog entry")
    run_p.add_argument("config", help="path to a config file, or a catalog entry name")
    run_p.add_argument(
        "--stages",
        default=None,
        help=f"comma-separated subset of: {','.join(STAGES)} (default: all)",
    )
    run_p.add_argument(
        "--require-invariance",
        action="store_true",
        help="fail (exit 2) when the invariance slope fit rejects the generator",
    )
    run_p.add_argument("--out", default="out", help="output directory (default: ./out)")
    run_p.add_argument("--nodes", type=int, default=None, help="override interval count")
    run_p.add_argument("--levels", type=int, default=None, help="override level count")
    run_p.add_argument(
        "--literal-delayed-noether",
        action="store_true",
        help="use the literal (asymmetric) upper-bound pairing of the delayed formula",
    )
    run_p.add_argument(
        "--dump-config",
        action="store_true",
        help="print the canonical form of the parsed config and exit",
    )
    sub.add_parser("list", help="list built-in catalog entries")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        return list_catalog()
    try:
        return run(args)
    except (ConfigError, ex.ExprError, UnsupportedProblemError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
