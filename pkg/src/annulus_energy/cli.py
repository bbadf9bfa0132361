"""Command-line front end: ``annulus-energy {solve,verify,sweep,energy}``.

Exit codes: 0 success, 1 solver or check failure, 2 usage error.  Options
may also come from ``--config FILE`` (``key = value`` lines); flags given on
the command line take precedence.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import checks, files
from .bvp import GRID_SIZE, SHOOT_TOL, SolverFailure, find_lambda, solve_profile
from .model import InvalidProblem, Problem
from .variational import EvaluationError, TrialProfile, total_energy

THREADS_ENV = "ANNULUS_ENERGY_THREADS"
PROBLEM_KEYS = ("n", "r", "R", "r_star", "R_star", "alpha")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    problem: Problem
    command: str
    tol: float = SHOOT_TOL
    grid: int = GRID_SIZE
    seed: int = 0
    output: str | None = None
    fmt: str = "csv"


# option name -> (type, default); None default means "required" for problem keys
_OPTIONS = {
    "n": (int, None), "r": (float, None), "R": (float, None),
    "r_star": (float, None), "R_star": (float, None), "alpha": (float, 0.5),
    "tol": (float, SHOOT_TOL), "grid": (int, GRID_SIZE), "seed": (int, 0),
    "output": (str, None), "format": (str, "csv"),
    "trials": (int, 100), "oracle_grid": (int, 128), "report": (str, None),
    "lambda_min": (float, None), "lambda_max": (float, None), "points": (int, 9),
    "alpha_values": (str, None), "alpha_min": (float, None), "alpha_max": (float, None),
    "jump_threshold": (float, 0.1), "profile": (str, None),
}


def _add_problem(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("problem")
    g.add_argument("--n", type=int, help="dimension (integer >= 2)")
    g.add_argument("--r", type=float, help="inner radius of the domain annulus")
    g.add_argument("--R", type=float, help="outer radius of the domain annulus")
    g.add_argument("--r-star", dest="r_star", type=float, help="inner target radius")
    g.add_argument("--R-star", dest="R_star", type=float, help="outer target radius")
    g.add_argument("--alpha", type=float, help="weight of the n-energy term (default 0.5)")
    g.add_argument("--tol", type=float, help="shooting tolerance relative to R* (default 1e-9)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="annulus-energy", allow_abbrev=False,
        description="Energy-minimal radial stretchings between annuli in R^n.")
    parser.add_argument("--config", help="key = value file; command-line flags override it")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", allow_abbrev=False, help="solve for the minimising profile")
    _add_problem(p)
    p.add_argument("--grid", type=int, help=f"output grid size (default {GRID_SIZE})")
    p.add_argument("--output", help="base path; writes BASE.csv|json and BASE.report.json "
                   "(a matching suffix is dropped)")
    p.add_argument("--format", choices=("csv", "json"), help="profile table format")

    p = sub.add_parser("verify", allow_abbrev=False, help="run the invariant checks")
    _add_problem(p)
    p.add_argument("--trials", type=int, help="random trial profiles (0 skips dominance)")
    p.add_argument("--oracle-grid", dest="oracle_grid", type=int,
                   help="grid for the discrete oracle (0 skips it)")
    p.add_argument("--seed", type=int)
    p.add_argument("--report", help="write the check results and cross-check report (json)")

    p = sub.add_parser("sweep", allow_abbrev=False, help="tabulate over lambda or alpha")
    _add_problem(p)
    p.add_argument("--lambda-min", dest="lambda_min", type=float)
    p.add_argument("--lambda-max", dest="lambda_max", type=float)
    p.add_argument("--alpha-values", dest="alpha_values", help="comma-separated alphas")
    p.add_argument("--alpha-min", dest="alpha_min", type=float)
    p.add_argument("--alpha-max", dest="alpha_max", type=float)
    p.add_argument("--points", type=int, help="number of sweep points (default 9)")
    p.add_argument("--jump-threshold", dest="jump_threshold", type=float,
                   help="largest allowed relative jump of lambda* between adjacent alphas")
    p.add_argument("--grid", type=int)
    p.add_argument("--output", help="table file")
    p.add_argument("--format", choices=("csv", "json"))

    p = sub.add_parser("energy", allow_abbrev=False, help="total energy of a profile file")
    _add_problem(p)
    p.add_argument("--profile", help="csv or json file with columns s, H, K")
    p.add_argument("--output", help="write the energy report (json)")
    return parser


def _merge_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    """Fill options missing on the command line from the config file, then defaults."""
    present = set(vars(args))
    if args.config:
        try:
            entries = files.read_config(args.config)
        except (OSError, files.FormatError) as exc:
            parser.error(f"cannot read config: {exc}")
        for key, raw in entries.items():
            if key not in present or key in ("command", "config"):
                parser.error(f"config key {key!r} is not an option of {args.command!r}")
            if getattr(args, key) is None:
                kind = _OPTIONS[key][0]
                try:
                    setattr(args, key, kind(raw))
                except ValueError:
                    parser.error(f"config key {key!r}: cannot parse {raw!r}")
    for key in present & set(_OPTIONS):
        if getattr(args, key) is None:
            setattr(args, key, _OPTIONS[key][1])
    missing = [k for k in PROBLEM_KEYS if getattr(args, k) is None]
    if missing:
        flags = ", ".join("--" + k.replace("_", "-") for k in missing)
        parser.error(f"missing required option(s): {flags}")


def _problem(args, parser) -> Problem:
    try:
        return Problem(args.n, args.r, args.R, args.r_star, args.R_star, args.alpha)
    except InvalidProblem as exc:
        parser.error(str(exc))


def _say(line: str = "") -> None:
    print(line, flush=True)


# --- commands ---------------------------------------------------------------------------

def cmd_solve(config: RunConfig) -> int:
    problem = config.problem
    paths = None
    if config.output:
        base = config.output.removesuffix(f".{config.fmt}")
        paths = (f"{base}.{config.fmt}", f"{base}.report.json")
        for path in paths:
            files.ensure_writable(path)
    sol = find_lambda(problem, config.tol, out_grid_size=config.grid)
    report = total_energy(sol.profile, problem, sol.lam)
    prof = sol.profile
    _say(f"lambda_star = {sol.lam!r}")
    _say(f"case = {report.case.tag.value if report.case else 'unclassified'}")
    _say(f"energy_total = {report.total!r}")
    _say(f"energy_term = {report.energy_term!r}")
    _say(f"distortion_term = {report.distortion_term!r}")
    _say(f"el_residual = {report.el_residual!r}")
    _say(f"boundary_defect = {float(abs(prof.H[-1] - problem.R_star))!r}")
    if paths:
        cols = files.profile_columns(prof.grid, prof.H, prof.K, problem)
        files.write_text(paths[0], files.profile_text(cols, config.fmt))
        files.write_text(paths[1], files.dumps(files.report_dict(report, problem)))
        _say(f"wrote {paths[0]} and {paths[1]}")
    return 0


def cmd_verify(config: RunConfig, trials: int, oracle_grid: int, report_path: str | None) -> int:
    if report_path:
        files.ensure_writable(report_path)

    def log(chk):
        _say(f"{chk.status.upper():4s}  {chk.name}: {chk.detail}")

    results = checks.run_all(config.problem, trials=trials, oracle_grid=oracle_grid,
                             seed=config.seed, tol=config.tol, log=log)
    failed = [c.name for c in results if c.status == checks.FAIL]
    if report_path:
        doc = {
            "problem": {k: getattr(config.problem, k) for k in PROBLEM_KEYS},
            "checks": [{"name": c.name, "status": c.status, "detail": c.detail}
                       for c in results],
            "planar_crosscheck": next((c.data["report"] for c in results
                                       if "report" in c.data), None),
        }
        files.write_text(report_path, files.dumps(doc))
        _say(f"wrote {report_path}")
    if failed:
        _say(f"FAILED: {', '.join(failed)}")
        return 1
    _say(f"all {len(results)} checks passed or skipped")
    return 0


def _thread_count(jobs: int) -> int:
    cap = os.environ.get(THREADS_ENV)
    limit = os.cpu_count() or 1
    if cap:
        try:
            limit = max(1, int(cap))
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer, got {cap!r}")
    return max(1, min(jobs, limit))


def _parallel_map(fn, values):
    """Map in a thread pool; results come back in input order."""
    with ThreadPoolExecutor(max_workers=_thread_count(len(values))) as pool:
        return list(pool.map(fn, values))


def _lambda_row(problem, grid):
    def run(lam):
        prof = solve_profile(lam, problem, out_grid_size=grid)
        e = total_energy(prof, problem, lam)
        end = float(prof.H[-1])
        return {"lambda": lam, "H_R": end, "shoot": end - problem.R_star,
                "energy_total": e.total}
    return run


def _alpha_row(problem, grid, tol):
    def run(alpha):
        p = Problem(problem.n, problem.r, problem.R, problem.r_star, problem.R_star, alpha)
        sol = find_lambda(p, tol, out_grid_size=grid)
        e = total_energy(sol.profile, p, sol.lam)
        return {"alpha": alpha, "lambda_star": sol.lam, "energy_total": e.total,
                "energy_term": e.energy_term, "distortion_term": e.distortion_term}
    return run


def sweep_values(args) -> tuple[str, list[float]]:
    """Sweep variable and its values, sorted ascending; raises ``UsageError``."""
    lam_mode = args.lambda_min is not None or args.lambda_max is not None
    alpha_mode = any(v is not None for v in (args.alpha_values, args.alpha_min, args.alpha_max))
    if lam_mode == alpha_mode:
        raise UsageError("give either a lambda range or alpha values, not both or neither")
    if lam_mode:
        lo, hi = args.lambda_min, args.lambda_max
        if lo is None or hi is None or not (0 < lo < hi) or args.points < 2:
            raise UsageError("lambda sweep needs 0 < --lambda-min < --lambda-max and --points >= 2")
        return "lambda", np.geomspace(lo, hi, args.points).tolist()
    if args.alpha_values is not None:
        try:
            values = sorted({float(v) for v in args.alpha_values.split(",") if v.strip()})
        except ValueError:
            raise UsageError(f"cannot parse --alpha-values {args.alpha_values!r}")
    else:
        lo, hi = args.alpha_min, args.alpha_max
        if lo is None or hi is None or not lo < hi or args.points < 2:
            raise UsageError("alpha sweep needs --alpha-min < --alpha-max and --points >= 2")
        values = np.linspace(lo, hi, args.points).tolist()
    if not values:
        raise UsageError("empty alpha sweep")
    if not all(0 < v < 1 for v in values):
        raise UsageError("alpha values must lie in (0, 1)")
    return "alpha", values


def cmd_sweep(config: RunConfig, variable: str, values: list[float],
              jump_threshold: float) -> int:
    if config.output:
        files.ensure_writable(config.output)
    problem = config.problem
    if variable == "lambda":
        rows = _parallel_map(_lambda_row(problem, config.grid), values)
        ends = [row["H_R"] for row in rows]
        increasing = all(b > a for a, b in zip(ends, ends[1:]))
        brackets = rows[0]["shoot"] < 0 < rows[-1]["shoot"]
        _say(f"H_lambda(R) strictly increasing: {'yes' if increasing else 'NO'}")
        _say(f"sign change of H_lambda(R) - R* inside the range: {'yes' if brackets else 'no'}")
        ok = increasing
    else:
        rows = _parallel_map(_alpha_row(problem, config.grid, config.tol), values)
        lams = [row["lambda_star"] for row in rows]
        jumps = [abs(b - a) / max(abs(a), abs(b)) for a, b in zip(lams, lams[1:])]
        worst = max(jumps, default=0.0)
        ok = worst <= jump_threshold
        _say(f"largest relative jump of lambda* between adjacent alphas: {worst!r} "
             f"(threshold {jump_threshold!r}) {'ok' if ok else 'EXCEEDED'}")
    text = _rows_text(rows, config.fmt)
    if config.output:
        files.write_text(config.output, text)
        _say(f"wrote {config.output}")
    else:
        sys.stdout.write(text)
    return 0 if ok else 1


def _rows_text(rows: list[dict], fmt: str) -> str:
    keys = list(rows[0])
    if fmt == "json":
        return files.dumps({k: [row[k] for row in rows] for k in keys})
    lines = [",".join(keys)]
    lines += [",".join(repr(float(row[k])) for k in keys) for row in rows]
    return "\n".join(lines) + "\n"


def cmd_energy(config: RunConfig, profile_path: str) -> int:
    if config.output:
        files.ensure_writable(config.output)
    cols = files.read_profile(profile_path)
    grid, H, K = cols["s"], cols["H"], cols["K"]
    problem = config.problem
    scale = problem.R_star
    if abs(H[0] - problem.r_star) > 1e-9 * scale or abs(H[-1] - problem.R_star) > 1e-9 * scale:
        _say("warning: profile endpoints differ from (r*, R*)")
    trial = TrialProfile(grid, H, K, problem, "file")
    report = total_energy(trial, problem)
    _say(f"energy_total = {report.total!r}")
    _say(f"energy_term = {report.energy_term!r}")
    _say(f"distortion_term = {report.distortion_term!r}")
    _say(f"el_residual = {report.el_residual!r}")
    if config.output:
        files.write_text(config.output, files.dumps(files.report_dict(report, problem)))
        _say(f"wrote {config.output}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _merge_config(args, parser)
    problem = _problem(args, parser)
    if not (args.tol > 0):
        parser.error("--tol must be positive")
    grid = getattr(args, "grid", GRID_SIZE)
    if grid < 16:
        parser.error("--grid must be at least 16")
    config = RunConfig(problem, args.command, args.tol, grid, getattr(args, "seed", 0),
                       getattr(args, "output", None), getattr(args, "format", "csv"))
    try:
        if args.command == "solve":
            return cmd_solve(config)
        if args.command == "verify":
            if args.trials < 0 or args.oracle_grid < 0:
                parser.error("--trials and --oracle-grid must be non-negative")
            if 0 < args.oracle_grid < 32:
                parser.error("--oracle-grid must be 0 or at least 32")
            return cmd_verify(config, args.trials, args.oracle_grid, args.report)
        if args.command == "sweep":
            variable, values = sweep_values(args)
            return cmd_sweep(config, variable, values, args.jump_threshold)
        if args.profile is None:
            parser.error("energy needs --profile")
        return cmd_energy(config, args.profile)
    except (UsageError, files.FormatError, OSError) as exc:
        parser.error(str(exc))
    except (SolverFailure, EvaluationError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
