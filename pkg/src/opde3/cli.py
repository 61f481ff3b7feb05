"""Command-line front end: ``opde3 analyze | solve | verify``."""
import argparse
import json
import math
import sys

import numpy as np

from . import analyzer
from .errors import (BoundaryConditionViolated, ContractionFailure, IterationCapExceeded,
                     KappaOutOfRange, NotContracting, ResidualExceeded)
from .function_space import GridSpec, differentiate, l2_norm_values, to_csv, w23_norm
from .perturbed import FullProblem, solve_full
from .principal import PrincipalSolver
from .problem_file import ProblemFileError, load
from .sampling import random_boundary, random_operator, random_perturbation

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CERTIFIED = 2
EXIT_KAPPA = 3
EXIT_RESIDUAL = 4
EXIT_CONTRACTION = 5
EXIT_CHECKS = 6

VERDICT_EXIT = {analyzer.SOLVABLE: EXIT_OK, analyzer.NOT_CERTIFIED: EXIT_NOT_CERTIFIED,
                analyzer.KAPPA_TOO_LARGE: EXIT_KAPPA}


def _plain(obj):
    """JSON-ready copy with floats rounded to 12 significant digits."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        return float(f"{x:.12g}")
    return obj


def dumps(obj):
    return json.dumps(_plain(obj), indent=2)


def _emit(obj, path=None):
    text = dumps(obj) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _report_dict(report, checks=()):
    d = report.to_dict()
    d["checks"] = [c.to_dict() for c in checks]
    return d


def cmd_analyze(args):
    prob = load(args.file)
    report = analyzer.analyze(prob.A, prob.K, prob.perturbation, prob.grid)
    _emit(_report_dict(report))
    return VERDICT_EXIT[report.verdict]


def _fd_norms(u):
    dt = u.u.grid.dt
    return {f"d{k}": l2_norm_values(differentiate(u.u, k).values, dt) for k in (1, 2, 3)}


def cmd_solve(args):
    prob = load(args.file)
    report = analyzer.analyze(prob.A, prob.K, prob.perturbation, prob.grid)
    out = {"analysis": _report_dict(report), "oracle_free": prob.oracle_free}
    if report.verdict != analyzer.SOLVABLE and not args.force:
        print(f"refusing to solve: verdict {report.verdict} (use --force)", file=sys.stderr)
        _emit(out, args.report)
        return VERDICT_EXIT[report.verdict]
    solver = PrincipalSolver(prob.A, prob.K, prob.grid, prob.tol)
    full = FullProblem(prob.A, prob.K, prob.perturbation, prob.f, prob.grid, prob.tol)
    code = EXIT_OK
    try:
        u, stats = solve_full(full, principal=solver)
    except (ResidualExceeded, BoundaryConditionViolated, IterationCapExceeded) as exc:
        out["error"] = {"type": type(exc).__name__, "message": str(exc), **exc.achieved}
        code = EXIT_RESIDUAL
    except NotContracting as exc:
        out["error"] = {"type": type(exc).__name__, "message": str(exc), **exc.achieved}
        code = EXIT_CONTRACTION
    except ContractionFailure as exc:
        out["error"] = {"type": type(exc).__name__, "message": str(exc)}
        code = EXIT_CONTRACTION
    if code != EXIT_OK:
        print(out["error"]["message"], file=sys.stderr)
        _emit(out, args.report)
        return code
    f_norm = stats.f_norm
    w = w23_norm(u, warn=False)
    out.update({
        "residual": stats.final_residual,
        "relative_residual": stats.final_residual / f_norm if f_norm > 0 else 0.0,
        "bc0": stats.bc0, "bc1": stats.bc1,
        "w23_norm": w, "f_norm": f_norm,
        "iterations": stats.to_dict(),
        "fd_derivative_norms": _fd_norms(u),
    })
    if report.verdict == analyzer.SOLVABLE:
        bound = report.c_consts[0] / report.margin * f_norm
        out["apriori"] = {"bound": bound, "pass": w <= bound * 1.05}
    if args.out:
        to_csv(u.u, args.out)
    _emit(out, args.report)
    return EXIT_OK


def _parse_random(text):
    key, _, val = text.partition("=")
    try:
        n = int(val if _ else key)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected n=N, got {text!r}") from None
    if _ and key.strip() != "n" or n < 1:
        raise argparse.ArgumentTypeError(f"expected n=N with N >= 1, got {text!r}")
    return n


def random_instance(n, seed, N=4096):
    """Admissible random problem: kappa in {0, 0.25, 0.5} and alpha = 0.5."""
    rng = np.random.default_rng(seed)
    A = random_operator(rng, n)
    kappa = float(rng.choice([0.0, 0.25, 0.5]))
    K = random_boundary(rng, A, kappa)
    perturbation = random_perturbation(rng, n, kappa, 0.5)
    return A, K, perturbation, GridSpec.default_for(A, N=N)


def cmd_verify(args):
    f = None
    if args.random is not None:
        A, K, perturbation, grid = random_instance(args.random, args.seed)
    elif args.file:
        prob = load(args.file)
        A, K, perturbation, grid = prob.A, prob.K, prob.perturbation, prob.grid
        if l2_norm_values(prob.f.values, grid.dt) > 0:
            f = prob.f
    else:
        print("verify needs a problem file or --random n=N", file=sys.stderr)
        return EXIT_INPUT
    report, checks = analyzer.run_suite(A, K, perturbation, grid, args.samples, args.seed, f)
    _emit(_report_dict(report, checks), args.report)
    failed = [c.name for c in checks if not c.passed]
    if failed:
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
        return EXIT_CHECKS
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="opde3", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="solvability verdict for a problem file")
    p.add_argument("file")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("solve", help="solve and certify a problem")
    p.add_argument("file")
    p.add_argument("--out", help="solution CSV (t, Re u)")
    p.add_argument("--report", help="report JSON (default: stdout)")
    p.add_argument("--force", action="store_true", help="solve even without a SOLVABLE verdict")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="run the numerical certification suite")
    p.add_argument("file", nargs="?")
    p.add_argument("--random", type=_parse_random, metavar="n=N",
                   help="use a random admissible instance of dimension N")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--report", help="report JSON (default: stdout)")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ProblemFileError, KappaOutOfRange) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
