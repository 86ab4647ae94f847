"""Command-line front door.

Subcommands: check, solve, sweep, halfline, verify.  Exit codes are a
contract: 0 ok/converged, 1 usage or parse problem, 2 hypothesis fail,
3 inconclusive hypotheses, 4 non-convergence or verification failure.

All numeric output is decimal with 17 significant digits so tables
round-trip doubles exactly.  Run records reuse the config text format
and therefore round-trip through parse_config.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .config import (
    ConfigDoc,
    ProblemConfig,
    emit_config,
    load_problem_config,
    read_config,
    with_overrides,
)
from .errors import ConfigError, PhibvpError
from .grid import GridFunction, cumulative_integral, forward_difference_residual
from .halfline import HeteroclinicReport, solve_halfline
from .hypotheses import HypothesisReport
from .problem import BvpProblem
from .solver import SolveReport, solve

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_HYPOTHESIS = 2
EXIT_INCONCLUSIVE = 3
EXIT_NUMERIC = 4

TABLE_HEADER = "t,x,dx,u"


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _sanitize(text: str) -> str:
    """Make arbitrary detail text safe for one config-format value."""
    return " ".join(str(text).replace("#", "").replace(";", "").split())


# -- solution tables --------------------------------------------------------


def write_solution_table(path: str, problem: BvpProblem, report: SolveReport) -> None:
    singular = problem.mesh.singular_mask()
    dx = np.where(singular, np.nan, report.x_prime.values)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(TABLE_HEADER + "\n")
        for t, x, d, u in zip(
            problem.mesh.nodes, report.x.values, dx, report.u.values
        ):
            handle.write(f"{_fmt(t)},{_fmt(x)},{_fmt(d)},{_fmt(u)}\n")


def read_solution_table(path: str):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            header = handle.readline().strip()
            if header != TABLE_HEADER:
                raise ConfigError(
                    f"solution table must start with {TABLE_HEADER!r}, got {header!r}"
                )
            data = np.loadtxt(handle, delimiter=",", ndmin=2)
    except OSError as exc:
        raise ConfigError(f"cannot read table {path!r}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"malformed table {path!r}: {exc}") from exc
    if data.shape[1] != 4:
        raise ConfigError(f"expected 4 columns in {path!r}, got {data.shape[1]}")
    return data[:, 0], data[:, 1], data[:, 2], data[:, 3]


# -- run records -------------------------------------------------------------


def _config_echo_sections(doc: ConfigDoc):
    return tuple((f"config.{sec}", pairs) for sec, pairs in doc.sections)


def _check_sections(report: HypothesisReport):
    sections = [
        (
            "check",
            (
                ("theorem", report.theorem),
                ("overall", report.overall),
            ),
        )
    ]
    for item in report.items:
        pairs = [("verdict", item.verdict)]
        pairs += [(key, _fmt(val)) for key, val in item.quantities]
        if item.detail:
            pairs.append(("detail", _sanitize(item.detail)))
        sections.append((f"check.{item.name}", tuple(pairs)))
    return tuple(sections)


def _solve_section(report: SolveReport):
    pairs = (
        ("status", report.status),
        ("iterations", str(report.iterations)),
        ("beta", _fmt(report.beta)),
        ("residual", _fmt(report.residual)),
        ("boundary_defect", _fmt(report.boundary_defect)),
        ("truncation_count", str(report.truncation_count)),
        ("psi_clip_count", str(report.psi_clip_count)),
        ("max_envelope_excess", _fmt(report.max_envelope_excess)),
    )
    return (("solve", pairs),)


def _halfline_sections(report: HeteroclinicReport):
    pairs = [
        ("status", report.status),
        ("intervals", str(len(report.runs))),
        ("tail_value", _fmt(report.tail_value)),
        ("tail_defect", _fmt(report.tail_defect)),
        ("k_infinity", _fmt(report.k_infinity)),
        ("s_star_infinity", _fmt(report.s_star_infinity)),
        ("ell_infinity", _fmt(report.ell_infinity)),
        ("uniform_envelope_ok", str(report.uniform_envelope_ok).lower()),
        ("uniform_offset_ok", str(report.uniform_offset_ok).lower()),
    ]
    if report.detail:
        pairs.append(("detail", _sanitize(report.detail)))
    sections = [("halfline", tuple(pairs))]
    if report.gaps:
        gap_pairs = tuple(
            (f"after_{label:g}", _fmt(gap)) for label, gap in report.gaps
        )
        sections.append(("halfline.gaps", gap_pairs))
    return tuple(sections)


def build_run_record(
    command: str,
    doc: ConfigDoc,
    exit_code: int,
    seed: int | None = None,
    check: HypothesisReport | None = None,
    solve_report: SolveReport | None = None,
    halfline_report: HeteroclinicReport | None = None,
) -> ConfigDoc:
    run_pairs = [
        ("command", command),
        ("version", __version__),
        ("timestamp", time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())),
        ("exit_code", str(exit_code)),
    ]
    if seed is not None:
        run_pairs.append(("seed", str(seed)))
    sections = [("run", tuple(run_pairs))]
    sections.extend(_config_echo_sections(doc))
    if check is not None:
        sections.extend(_check_sections(check))
    if solve_report is not None:
        sections.extend(_solve_section(solve_report))
    if halfline_report is not None:
        sections.extend(_halfline_sections(halfline_report))
    return ConfigDoc(sections=tuple(sections))


def _write_record(outdir: str, record: ConfigDoc) -> str:
    path = os.path.join(outdir, "record.txt")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(emit_config(record))
    return path


# -- command implementations --------------------------------------------------


def _print_check(report: HypothesisReport) -> None:
    print(f"hypothesis set: {report.theorem}")
    for item in report.items:
        extras = " ".join(f"{k}={_fmt(v)}" for k, v in item.quantities)
        line = f"  {item.name}: {item.verdict}"
        if extras:
            line += f"  ({extras})"
        print(line)
    print(f"overall: {report.overall}")


def _check_exit_code(report: HypothesisReport) -> int:
    if report.overall == "pass":
        return EXIT_OK
    if report.overall == "fail":
        return EXIT_HYPOTHESIS
    return EXIT_INCONCLUSIVE


def _run_configured_check(cfg: ProblemConfig):
    built = cfg.build_halfline() if cfg.halfline else cfg.build_finite()
    return built, cfg.run_check(built)


def cmd_check(cfg: ProblemConfig, args) -> int:
    try:
        _, report = _run_configured_check(cfg)
    except PhibvpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _print_check(report)
    code = _check_exit_code(report)
    if args.output is not None:
        os.makedirs(args.output, exist_ok=True)
        record = build_run_record("check", cfg.doc, code, seed=args.seed, check=report)
        _write_record(args.output, record)
    return code


def cmd_solve(cfg: ProblemConfig, args) -> int:
    os.makedirs(args.output, exist_ok=True)
    problem = cfg.build_finite()
    try:
        report_check = cfg.run_check(problem)
    except PhibvpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _print_check(report_check)
    if report_check.overall != "pass":
        code = _check_exit_code(report_check)
        record = build_run_record(
            "solve", cfg.doc, code, seed=args.seed, check=report_check
        )
        _write_record(args.output, record)
        return code

    try:
        report = solve(problem, cfg.iteration)
    except PhibvpError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        record = build_run_record(
            "solve", cfg.doc, EXIT_NUMERIC, seed=args.seed, check=report_check
        )
        _write_record(args.output, record)
        return EXIT_NUMERIC

    table_path = os.path.join(args.output, "solution.txt")
    write_solution_table(table_path, problem, report)
    code = EXIT_OK if report.status == "converged" else EXIT_NUMERIC
    record = build_run_record(
        "solve", cfg.doc, code, seed=args.seed, check=report_check, solve_report=report
    )
    _write_record(args.output, record)
    print(
        f"solve: {report.status} in {report.iterations} iterations, "
        f"residual {_fmt(report.residual)}"
    )
    print(f"wrote {table_path}")
    return code


def _sweep_row(cfg: ProblemConfig, lam: float) -> tuple[float, str, str, float]:
    try:
        problem = cfg.build_finite(nu2_override=lam)
        report = cfg.run_check(problem)
    except PhibvpError:
        return lam, "error", "skipped", math.nan
    verdict = report.overall
    if verdict != "pass":
        return lam, verdict, "skipped", math.nan
    try:
        rep = solve(problem, cfg.iteration)
    except PhibvpError as exc:
        return lam, verdict, f"error:{type(exc).__name__}", math.nan
    return lam, verdict, rep.status, rep.residual


def cmd_sweep(cfg: ProblemConfig, args) -> int:
    if cfg.sweep_range is None:
        print("error: config has no [sweep] section", file=sys.stderr)
        return EXIT_USAGE
    os.makedirs(args.output, exist_ok=True)
    lo, hi, count = cfg.sweep_range
    lams = np.linspace(lo, hi, count) if count > 0 else np.empty(0)
    workers = max(1, args.threads)
    if count > 0:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda lam: _sweep_row(cfg, float(lam)), lams))
    else:
        rows = []

    table_path = os.path.join(args.output, "sweep.txt")
    with open(table_path, "w", encoding="utf-8") as handle:
        handle.write("lambda,check,solve,residual\n")
        for lam, verdict, status, residual in rows:
            handle.write(f"{_fmt(lam)},{verdict},{status},{_fmt(residual)}\n")
    record = build_run_record("sweep", cfg.doc, EXIT_OK, seed=args.seed)
    _write_record(args.output, record)
    print(f"wrote {table_path} ({len(rows)} rows)")
    flips = [
        (rows[i][0], rows[i + 1][0])
        for i in range(len(rows) - 1)
        if (rows[i][1] == "pass") != (rows[i + 1][1] == "pass")
    ]
    for a, b in flips:
        print(f"check verdict flips between lambda = {_fmt(a)} and {_fmt(b)}")
    return EXIT_OK


def cmd_halfline(cfg: ProblemConfig, args) -> int:
    os.makedirs(args.output, exist_ok=True)
    hp = cfg.build_halfline()
    try:
        report_check = cfg.run_check(hp)
    except PhibvpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _print_check(report_check)
    if report_check.overall != "pass":
        code = _check_exit_code(report_check)
        record = build_run_record(
            "halfline", cfg.doc, code, seed=args.seed, check=report_check
        )
        _write_record(args.output, record)
        return code

    try:
        hetero = solve_halfline(hp, cfg.iteration)
    except PhibvpError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    for run in hetero.runs:
        problem = run.report.x.mesh
        path = os.path.join(args.output, f"interval_{run.n:g}.txt")
        singular = problem.singular_mask()
        dx = np.where(singular, np.nan, run.report.x_prime.values)
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(TABLE_HEADER + "\n")
            for t, x, d, u in zip(
                problem.nodes, run.report.x.values, dx, run.report.u.values
            ):
                handle.write(f"{_fmt(t)},{_fmt(x)},{_fmt(d)},{_fmt(u)}\n")
        gap_text = "-" if run.gap is None else _fmt(run.gap)
        print(
            f"interval [0, {run.n:g}]: {run.report.status}, gap {gap_text}"
        )

    gaps_path = os.path.join(args.output, "gaps.txt")
    with open(gaps_path, "w", encoding="utf-8") as handle:
        handle.write("n,gap\n")
        for label, gap in hetero.gaps:
            handle.write(f"{_fmt(label)},{_fmt(gap)}\n")

    code = EXIT_OK if hetero.status == "converged" else EXIT_NUMERIC
    record = build_run_record(
        "halfline",
        cfg.doc,
        code,
        seed=args.seed,
        check=report_check,
        halfline_report=hetero,
    )
    _write_record(args.output, record)
    print(f"halfline: {hetero.status}, tail value {_fmt(hetero.tail_value)}")
    if hetero.detail:
        print(f"detail: {hetero.detail}")
    return code


def cmd_verify(cfg: ProblemConfig, args) -> int:
    t, x, dx, u = read_solution_table(args.table)
    problem = cfg.build_finite()
    nodes = problem.mesh.nodes
    if t.size != nodes.size or np.max(np.abs(t - nodes)) > 1e-9 * (1.0 + problem.T):
        print(
            "error: table grid does not match the config mesh "
            f"({t.size} rows vs {nodes.size} nodes)",
            file=sys.stderr,
        )
        return EXIT_USAGE

    scale_x = 1.0 + max(abs(problem.nu1), abs(problem.nu2))
    boundary = max(abs(x[0] - problem.nu1), abs(x[-1] - problem.nu2))

    singular = problem.mesh.singular_mask()
    usable = ~singular & np.isfinite(dx)
    kv = np.asarray(problem.weight(nodes), dtype=float)
    with np.errstate(all="ignore"):
        phi_kdx = np.asarray(problem.phi.fn(kv[usable] * dx[usable]), dtype=float)
    scale_u = 1.0 + float(np.max(np.abs(u)))
    consistency = float(np.max(np.abs(u[usable] - phi_kdx))) if usable.any() else 0.0

    dx_filled = np.where(usable, dx, 0.0)
    with np.errstate(all="ignore"):
        f_vals = np.asarray(problem.rhs(nodes, x, dx_filled), dtype=float)
    f_vals = np.where(np.isfinite(f_vals) & ~singular, f_vals, 0.0)
    f_grid = GridFunction(problem.mesh, f_vals)
    cum = cumulative_integral(f_grid)
    integral = float(np.max(np.abs(u - (u[0] + cum.values))))
    residual = forward_difference_residual(GridFunction(problem.mesh, u), f_grid)

    # x must be the integral of dx: trapezoid per cell, skipping cells
    # whose endpoint slope is unavailable (singular nodes)
    h = np.diff(nodes)
    both = usable[:-1] & usable[1:]
    increments = np.where(
        both, 0.5 * (dx_filled[:-1] + dx_filled[1:]) * h, np.diff(x)
    )
    recon = problem.nu1 + np.concatenate(([0.0], np.cumsum(increments)))
    slope_integral = float(np.max(np.abs(recon - x)))

    print(f"boundary defect:    {_fmt(boundary)}")
    print(f"operator defect:    {_fmt(consistency)}  (u vs Phi(k dx))")
    print(f"integral defect:    {_fmt(integral)}  (u vs u(0) + cumulative f)")
    print(f"slope defect:       {_fmt(slope_integral)}  (x vs nu1 + cumulative dx)")
    print(f"residual (fwd diff): {_fmt(residual)}")

    ok = (
        boundary <= 1e-8 * scale_x
        and consistency <= 1e-7 * scale_u
        and integral <= 1e-6 * scale_u
        and slope_integral <= 1e-6 * scale_x
    )
    print("verification: " + ("ok" if ok else "FAILED"))
    return EXIT_OK if ok else EXIT_NUMERIC


# -- argument parsing ----------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    shared = _Parser(add_help=False)
    shared.add_argument("--mesh-n", type=int, default=None, help="override mesh cells")
    shared.add_argument("--tol-fp", type=float, default=None, help="fixed-point tolerance")
    shared.add_argument("--tol-beta", type=float, default=None, help="beta-equation tolerance")
    shared.add_argument("--damping", type=float, default=None, help="Picard damping factor")
    shared.add_argument("--max-iters", type=int, default=None, help="outer iteration cap")
    shared.add_argument("--threads", type=int, default=4, help="sweep worker threads")
    shared.add_argument("--seed", type=int, default=None, help="recorded in run records")

    parser = _Parser(prog="phibvp", description="phi-Laplacian boundary value problems")
    parser.add_argument("--version", action="version", version=f"phibvp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", parents=[shared], help="run hypothesis checks")
    p_check.add_argument("config")
    p_check.add_argument("-o", "--output", default=None, help="directory for the run record")

    p_solve = sub.add_parser("solve", parents=[shared], help="check then solve")
    p_solve.add_argument("config")
    p_solve.add_argument("-o", "--output", required=True)

    p_sweep = sub.add_parser("sweep", parents=[shared], help="feasibility sweep over lambda")
    p_sweep.add_argument("config")
    p_sweep.add_argument("-o", "--output", required=True)

    p_half = sub.add_parser("halfline", parents=[shared], help="heteroclinic limit process")
    p_half.add_argument("config")
    p_half.add_argument("-o", "--output", required=True)

    p_verify = sub.add_parser("verify", parents=[shared], help="re-verify a solution table")
    p_verify.add_argument("table")
    p_verify.add_argument("config")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse --help and --version exit 0; usage errors exit 1
        return int(exc.code or 0)

    try:
        doc = read_config(args.config)
        cfg = load_problem_config(doc)
        cfg = with_overrides(
            cfg,
            mesh_n=args.mesh_n,
            tol_fp=args.tol_fp,
            tol_beta=args.tol_beta,
            damping=args.damping,
            max_iters=args.max_iters,
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        if args.command == "check":
            return cmd_check(cfg, args)
        if args.command == "solve":
            return cmd_solve(cfg, args)
        if args.command == "sweep":
            return cmd_sweep(cfg, args)
        if args.command == "halfline":
            return cmd_halfline(cfg, args)
        if args.command == "verify":
            return cmd_verify(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PhibvpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    raise AssertionError("unreachable command dispatch")


if __name__ == "__main__":
    sys.exit(main())
