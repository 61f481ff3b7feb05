"""Solvability constants, verdicts and numerical certification of the estimates."""
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .boundary import estimate_kappa, raw_kappa
from .errors import KappaOutOfRange
from .function_space import GridSpec, l2_inner_re, l2_norm_values, w23_norm
from .perturbed import FullProblem, Perturbation, solve_full
from .principal import PhiContext, PrincipalSolver
from .sampling import random_rhs
from .spectral import apply_power, damped_sine_kernel, h_gamma_norm

CBASE = 2.0 ** (1.0 / 3.0) / np.sqrt(3.0)
SLACK = 5e-3

SOLVABLE = "SOLVABLE"
NOT_CERTIFIED = "NOT_CERTIFIED"
KAPPA_TOO_LARGE = "KAPPA_TOO_LARGE"


def _check_kappa(kappa):
    if not (0.0 <= kappa < 1.0):
        raise KappaOutOfRange(f"kappa must lie in [0, 1), got {kappa}")


def constants(kappa):
    """Return (C0, C1, C2) bounding ||A^{3-j} u^(j)|| by ||P0 u|| on the K-subspace."""
    _check_kappa(kappa)
    k23 = kappa ** (2.0 / 3.0)
    inv = (1.0 - kappa) ** -0.5
    c0 = inv
    c1 = CBASE * np.sqrt(1.0 + 3.0 * k23 / 2.0 ** (1.0 / 3.0)) * inv
    c2 = CBASE * (1.0 + np.sqrt(3.0) * k23) * inv
    return float(c0), float(c1), float(c2)


def alpha_of(kappa, b_norms):
    """C0 ||B3|| + C1 ||B2|| + C2 ||B1||; ``b_norms`` is (||B1||, ||B2||, ||B3||)."""
    c0, c1, c2 = constants(kappa)
    b1, b2, b3 = b_norms
    return c0 * b3 + c1 * b2 + c2 * b1


@dataclass
class SolvabilityReport:
    kappa: float
    b_norms: tuple
    c_consts: tuple
    alpha: float
    verdict: str
    margin: float
    kappa_estimate: float = None
    notes: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def analyze(A, K, perturbation=None, grid=None):
    """Verdict for regular solvability from kappa and the perturbation norms.

    A user-supplied ``K.kappa_cert`` is taken as the value of kappa; the
    numerical estimate is still reported alongside it.
    """
    perturbation = perturbation or Perturbation.zero(A.dim)
    if grid is not None:
        K.check_grid(grid)
    est = raw_kappa(K, A)
    notes = []
    if K.kappa_cert is not None:
        kappa = float(K.kappa_cert)
        if kappa < est:
            notes.append("kappa_cert is below the numerical estimate of ||K||")
    else:
        kappa = est
    b_norms = perturbation.norms()
    if kappa >= 1.0:
        return SolvabilityReport(kappa, b_norms, None, None, KAPPA_TOO_LARGE, None, est, notes)
    c = constants(kappa)
    alpha = alpha_of(kappa, b_norms)
    verdict = SOLVABLE if alpha < 1.0 else NOT_CERTIFIED
    return SolvabilityReport(kappa, b_norms, c, alpha, verdict, 1.0 - alpha, est, notes)


@dataclass
class CheckResult:
    name: str
    observed: float
    bound: float
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return {"name": self.name, "observed": self.observed, "bound": self.bound,
                "pass": self.passed, "detail": self.detail}


def damped_sine_integral(A, alpha, beta, x, grid):
    """Quadrature value of ||A^3 exp(-alpha A t) sin(beta A t) x||^2_{L2}."""
    vals = apply_power(A, 3, damped_sine_kernel(A, alpha, beta, grid.times, x))
    return l2_norm_values(vals, grid.dt) ** 2


def damped_sine_closed_form(A, alpha, beta, x):
    return (1.0 / (4 * alpha) - alpha / (4 * (alpha ** 2 + beta ** 2))) * h_gamma_norm(A, 2.5, x) ** 2


def verify_lemma1(A, alpha, beta, x, grid, rtol=1e-6, name="damped_sine"):
    """Compare the quadrature value with the closed form, which holds with equality."""
    lhs = damped_sine_integral(A, alpha, beta, x, grid)
    rhs = damped_sine_closed_form(A, alpha, beta, x)
    ok = lhs <= rhs * (1 + rtol) and abs(lhs - rhs) <= rtol * rhs
    rel = abs(lhs - rhs) / rhs if rhs > 0 else 0.0
    return CheckResult(name, lhs, rhs, bool(ok),
                       {"alpha": alpha, "beta": beta, "relative_gap": rel,
                        "note": "stated as an inequality; holds with equality"})


def verify_three_eighths(A, x, grid, rtol=1e-6):
    return verify_lemma1(A, 0.5, np.sqrt(3.0) / 2.0, x, grid, rtol, name="three_eighths")


def homogeneous_difference_ratio(A, x, grid):
    """||(exp(w1 A t) - exp(w2 A t)) x||_{W23} / (sqrt 3 ||x||_{5/2})."""
    from .boundary import BoundaryOperator

    g = PhiContext(A, BoundaryOperator(), grid).difference(x)
    return w23_norm(g) / (np.sqrt(3.0) * h_gamma_norm(A, 2.5, x))


def verify_homogeneous_difference(A, xs, grid, rtol=1e-4):
    ratios = [homogeneous_difference_ratio(A, x, grid) for x in xs]
    worst = max(ratios, default=1.0)
    gap = max((abs(r - 1.0) for r in ratios), default=0.0)
    return CheckResult("homogeneous_difference", worst, 1.0 + rtol, bool(worst <= 1 + rtol and gap <= rtol),
                       {"max_equality_gap": gap, "samples": len(ratios)})


@dataclass
class SampleMeasures:
    """Norms of one solver output u relevant to the a-priori estimates."""

    p0u: float
    w23: float
    a3u: float
    a2u1: float
    au2: float
    f_norm: float
    trace_identity_gap: float
    bc0: float
    bc1: float


def measure(A, K, u, f):
    from .boundary import apply_K

    dt = u.grid.dt
    p0u = l2_norm_values(u.d3.values - u.A3u.values, dt)
    w = w23_norm(u)
    lhs_trace = 2.0 * l2_inner_re(u.d3, u.A3u, endpoint_correction=True)
    rhs_trace = h_gamma_norm(A, 1.5, u.d1.values[0]) ** 2
    Ku = apply_K(K, u) if not K.is_zero else 0.0
    return SampleMeasures(
        p0u=p0u, w23=w,
        a3u=l2_norm_values(u.A3u.values, dt),
        a2u1=l2_norm_values(apply_power(A, 2, u.d1.values), dt),
        au2=l2_norm_values(apply_power(A, 1, u.d2.values), dt),
        f_norm=l2_norm_values(f.values, dt),
        trace_identity_gap=abs(lhs_trace - rhs_trace),
        bc0=h_gamma_norm(A, 2.5, u.u.values[0]),
        bc1=h_gamma_norm(A, 1.5, u.d1.values[0] - Ku))


def _threads():
    try:
        return max(1, int(os.environ.get("OPDE3_THREADS", "1")))
    except ValueError:
        return 1


def sample_solutions(A, K, grid, rhs_list, tol=1e-6):
    """Solve P0 u = f for each f; results keep the order of ``rhs_list``."""
    solver = PrincipalSolver(A, K, grid, tol)

    def one(f):
        return measure(A, K, solver.solve(f), f)

    workers = _threads()
    if workers == 1:
        return [one(f) for f in rhs_list]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, rhs_list))


def estimate_checks(kappa, measures, slack=SLACK):
    """CheckResults for the coercive and intermediate-derivative estimates."""
    c0, c1, c2 = constants(kappa)
    live = [m for m in measures if m.p0u > 0.0 and m.w23 > 0.0]

    def worst(values):
        return max(values, default=0.0)

    r13 = worst(m.a3u / m.p0u for m in live)
    r14 = worst(m.a2u1 / m.p0u for m in live)
    r15 = worst(m.au2 / m.p0u for m in live)
    coer = worst(((1 - kappa) * m.w23 ** 2 - m.p0u ** 2) / m.w23 ** 2 for m in live)
    ident = worst(m.trace_identity_gap / m.w23 ** 2 for m in live)
    bounded = worst(m.p0u ** 2 / m.w23 ** 2 for m in live)
    apriori = worst(m.w23 / m.f_norm for m in live if m.f_norm > 0)
    n = {"samples": len(measures), "kappa": kappa}
    return [
        CheckResult("estimate_A3u", r13, c0 * (1 + slack), r13 <= c0 * (1 + slack), {**n, "constant": c0}),
        CheckResult("estimate_A2u1", r14, c1 * (1 + slack), r14 <= c1 * (1 + slack), {**n, "constant": c1}),
        CheckResult("estimate_Au2", r15, c2 * (1 + slack), r15 <= c2 * (1 + slack), {**n, "constant": c2}),
        CheckResult("coercivity", coer, 1e-4, coer <= 1e-4, n),
        CheckResult("trace_identity", ident, 1e-4, ident <= 1e-4, n),
        CheckResult("boundedness", bounded, 2.0 + 1e-6, bounded <= 2.0 + 1e-6, n),
        CheckResult("apriori", apriori, c0 * 1.05, apriori <= c0 * 1.05, n),
    ]


def verify_estimates(A, K, samples, grid, seed=0, kappa=None, difference_samples=None):
    """Random solver outputs checked against the a-priori estimates and identities."""
    rng = np.random.default_rng(seed)
    kappa = estimate_kappa(K, A, grid) if kappa is None else kappa
    rhs = [random_rhs(rng, grid, A.dim).sample(grid) for _ in range(samples)]
    checks = estimate_checks(kappa, sample_solutions(A, K, grid, rhs))
    xs = [rng.standard_normal(A.dim) for _ in range(difference_samples or max(1, samples // 4))]
    checks.append(verify_homogeneous_difference(A, xs, grid))
    return checks


def operator_ratio(A, K, perturbation, grid, v, solver=None):
    """||P1 P0^{-1} v|| / ||v|| for one right-hand side."""
    from .perturbed import apply_P1

    solver = solver or PrincipalSolver(A, K, grid)
    w = apply_P1(perturbation, A, solver.solve(v, check=False))
    return l2_norm_values(w.values, grid.dt) / l2_norm_values(v.values, grid.dt)


def verify_contraction(A, K, perturbation, f, grid, kappa=None, tol=1e-6, slack=0.05,
                       probes=3, seed=0):
    """Observed Neumann contraction of the full problem and its residual.

    Besides the per-step ratios of the iteration, ``probes`` random
    right-hand sides bound ||P1 P0^{-1} v|| / ||v|| directly.
    """
    kappa = estimate_kappa(K, A, grid) if kappa is None else kappa
    alpha = alpha_of(kappa, perturbation.norms())
    p = FullProblem(A, K, perturbation, f, grid, tol)
    solver = PrincipalSolver(A, K, grid, tol)
    _, stats = solve_full(p, principal=solver)
    rng = np.random.default_rng(seed)
    probe = [operator_ratio(A, K, perturbation, grid,
                            random_rhs(rng, grid, A.dim).sample(grid), solver)
             for _ in range(probes)]
    ratio = max([stats.max_ratio, *probe])
    res = stats.final_residual / stats.f_norm if stats.f_norm > 0 else 0.0
    ok = ratio <= alpha + slack and res <= 10 * tol
    return CheckResult("contraction", ratio, alpha + slack, bool(ok),
                       {"alpha": alpha, "iterations": stats.iterations,
                        "relative_residual": res, "step_ratio": stats.max_ratio,
                        "probe_ratio": max(probe, default=0.0)})


def _damped_sine_checks(rng, A, grid, count):
    out = []
    for _ in range(count):
        x = rng.standard_normal(A.dim)
        a = float(rng.uniform(0.3, 2.0))
        b = float(rng.uniform(-2.0, 2.0))
        out.append(verify_lemma1(A, a, b, x, damped_sine_grid(A, a, grid.N)))
    cor = [verify_three_eighths(A, rng.standard_normal(A.dim), damped_sine_grid(A, 0.5, grid.N))
           for _ in range(count)]
    return [_merge("damped_sine", out), _merge("three_eighths", cor)]


def damped_sine_grid(A, alpha, N=4096):
    """Grid fitted to the damped kernel: the integrand has decayed by e^-24 at T.

    A tight T keeps dt small relative to the oscillation period, which is
    what limits the trapezoid rule here.
    """
    return GridSpec(12.0 / (alpha * A.mu0), N)


def _merge(name, checks):
    """Collapse same-kind checks into the worst relative gap."""
    gaps = [c.detail.get("relative_gap", 0.0) for c in checks]
    worst = int(np.argmax(gaps)) if gaps else 0
    return CheckResult(name, max(gaps, default=0.0), 1e-6, all(c.passed for c in checks),
                       {"samples": len(checks),
                        "worst": checks[worst].to_dict() if checks else None})


def run_suite(A, K, perturbation, grid, samples=20, seed=0, f=None):
    """Every numerical certificate for one problem, deterministic in ``seed``.

    The contraction check only runs when the instance is
    admissible (kappa < 1 and alpha < 1).
    """
    perturbation = perturbation or Perturbation.zero(A.dim)
    rng = np.random.default_rng(seed)
    report = analyze(A, K, perturbation, grid)
    checks = _damped_sine_checks(rng, A, grid, max(1, samples // 4))
    if report.verdict == KAPPA_TOO_LARGE:
        checks.append(CheckResult("kappa", report.kappa, 1.0, False, {}))
        return report, checks
    kappa = report.kappa
    checks += verify_estimates(A, K, samples, grid, seed=int(rng.integers(2**31)), kappa=kappa)
    if perturbation.is_zero:
        return report, checks
    if report.verdict == SOLVABLE:
        f = f if f is not None else random_rhs(rng, grid, A.dim).sample(grid)
        if l2_norm_values(f.values, grid.dt) > 0:
            checks.append(verify_contraction(A, K, perturbation, f, grid, kappa=kappa,
                                             seed=int(rng.integers(2**31))))
    return report, checks
