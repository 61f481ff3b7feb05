from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from oracles import ScalarOracle, principal_exp_oracle
from opde3.boundary import BoundaryOperator, Term, apply_K
from opde3.errors import BoundaryConditionViolated, ContractionFailure, ResidualExceeded
from opde3.function_space import GridFunction, GridSpec, l2_norm_values, w23_norm
from opde3.principal import (PhiContext, PrincipalInfo, PrincipalProblem, PrincipalSolver,
                             _Transform, p0_apply, particular_solution, phi_apply,
                             solve_phi_fixed_point, solve_principal)
from opde3.sampling import random_boundary, random_operator, random_rhs
from opde3.spectral import OMEGA1, OMEGA2, make_operator

A1 = make_operator([[1.0]])


def exp_rhs(grid):
    return GridFunction.from_callable(grid, lambda t: np.exp(-t))


def whole_line_q(t, b=1.0):
    """Decaying whole-line solution of q''' - q = e^{-bt} 1_{t>0}, restricted to t >= 0."""
    # unknowns a (left mode e^t), c1, c2 (right modes); continuity of q, q', q'' at 0
    p = -1.0 / (b ** 3 + 1.0)
    M = np.array([[1, -1, -1], [1, -OMEGA1, -OMEGA2], [1, -OMEGA1 ** 2, -OMEGA2 ** 2]], complex)
    a, c1, c2 = np.linalg.solve(M, np.array([p, -b * p, b * b * p], complex))
    return np.real(p * np.exp(-b * t) + c1 * np.exp(OMEGA1 * t) + c2 * np.exp(OMEGA2 * t))


def test_zero_rhs_gives_zero():
    g = GridSpec(40.0, 1024)
    u = solve_principal(PrincipalProblem(A1, BoundaryOperator(), GridFunction.from_real(g, np.zeros(g.N))))
    assert np.all(u.u.values == 0.0)
    q = particular_solution(A1, GridFunction.from_real(g, np.zeros(g.N)))
    assert np.all(q.u.values == 0.0)


def _pq_error(N):
    # f = e^{-2t}; the exactly solved piece is e^{-ct} f(0), so the
    # transformed remainder is e^{-2t} - e^{-ct}, which vanishes at t = 0
    g = GridSpec(40.0, N)
    f = GridFunction.from_callable(g, lambda t: np.exp(-2 * t))
    tr = _Transform(A1, g)
    c = tr.rate
    q = particular_solution(A1, f, tr)
    t = g.times
    exact = -np.exp(-c * t) / (c ** 3 + 1) + whole_line_q(t, 2.0) - whole_line_q(t, c)
    res = q.d3.values - q.A3u.values - f.values
    return np.abs(q.u.values[:, 0] - exact).max(), np.abs(res[3:-3]).max()


def test_particular_solution_oracle():
    err, res = _pq_error(4096)
    assert err < 1e-5
    assert res < 1e-5
    # the remainder has a slope jump at 0: second-order convergence
    coarse, _ = _pq_error(2048)
    assert 3.5 < coarse / err < 4.5


def test_whole_line_oracle_self_check():
    t = np.linspace(0.0, 5.0, 11)
    h = 1e-3
    for b in (1.0, 2.0):
        q = lambda s: whole_line_q(s, b)
        d3 = (q(t + 2 * h) - 2 * q(t + h) + 2 * q(t - h) - q(t - 2 * h)) / (2 * h ** 3)
        assert np.abs(d3[1:] - q(t[1:]) - np.exp(-b * t[1:])).max() < 1e-4


def test_multiplier_bound():
    A = make_operator(np.diag([0.5, 1.0, 2.5]))
    tr = _Transform(A, GridSpec(80.0, 1024))
    assert np.abs(A.eigenvalues ** 3 * tr.multipliers[0]).max() <= 1.0 + 1e-15


def test_scalar_oracle_and_refinement():
    errs = []
    for N in (2048, 4096):
        g = GridSpec(40.0, N)
        u = solve_principal(PrincipalProblem(A1, BoundaryOperator(), exp_rhs(g)))
        errs.append(np.abs(u.u.values[:, 0] - principal_exp_oracle(g.times)).max())
    assert errs[1] < 1e-5
    assert errs[1] < errs[0]


def test_nonlocal_condition():
    eps = 0.1
    K = BoundaryOperator([Term([[eps]], 1, 1.0)])
    g = GridSpec(40.0, 4096)
    u = solve_principal(PrincipalProblem(A1, K, exp_rhs(g)))
    assert abs(u.d1.values[0, 0] - eps * apply_K(BoundaryOperator([Term([[1.0]], 1, 1.0)]), u)[0]) < 1e-5
    assert abs(u.u.values[0, 0]) < 1e-12
    oracle = ScalarOracle(1.0, [(1.0, 1.0, 0)], k_terms=[(eps, 1, 1.0)])
    assert np.abs(u.u.values[:, 0] - oracle(g.times)).max() < 1e-5


def test_mixed_terms_against_oracle():
    terms = [(0.3, 2, 0.0), (-0.2, 0, 0.7), (0.15, 1, 2.0)]
    K = BoundaryOperator([Term([[c]], d, t) for c, d, t in terms])
    lam = 1.4
    A = make_operator([[lam]])
    g = GridSpec(40.0 / lam, 4096)
    f = GridFunction.from_callable(g, lambda t: t * np.exp(-0.9 * t) - 0.5 * np.exp(-2 * t))
    u = PrincipalSolver(A, K, g).solve(f)
    oracle = ScalarOracle(lam, [(1.0, 0.9, 1), (-0.5, 2.0, 0)], k_terms=terms)
    for order in range(4):
        exact = oracle(g.times, order)
        assert np.abs(u.derivative(order).values[:, 0] - exact).max() < 1e-5 * max(1, np.abs(exact).max())


def test_phi_examples():
    g = GridSpec(40.0, 1024)
    ctx = PhiContext(A1, BoundaryOperator(), g)
    assert np.all(phi_apply(ctx, np.array([1.0])) == 0)
    ctx = PhiContext(A1, BoundaryOperator([Term([[0.4]], 1, 0.5)]), g)
    assert np.all(phi_apply(ctx, np.zeros(1)) == 0)
    ctx = PhiContext(A1, BoundaryOperator([Term([[0.3]], 0, 0.0)]), g)
    assert abs(phi_apply(ctx, np.array([2.0]))[0]) < 1e-15


def test_phi_scalar_value():
    # Phi x = A^{-1}/(i sqrt3) * c * d/dt (2i e^{-t/2} sin(sqrt3 t/2)) at t=0 = c x * 2/2 ... exact
    c = 0.4
    g = GridSpec(40.0, 1024)
    ctx = PhiContext(A1, BoundaryOperator([Term([[c]], 1, 0.0)]), g)
    # derivative of (e^{w1 t} - e^{w2 t}) at 0 is w1 - w2 = i sqrt3
    assert phi_apply(ctx, np.array([1.0]))[0] == pytest.approx(c, rel=1e-14)


class _ScalarCtx:
    def __init__(self, q):
        self.q = q

    def apply(self, x):
        return self.q * x

    def norm(self, x):
        return float(np.linalg.norm(x))


def test_fixed_point_examples():
    g = GridSpec(40.0, 1024)
    ctx = PhiContext(A1, BoundaryOperator(), g)
    x, it = solve_phi_fixed_point(ctx, np.array([0.7 + 0.1j]))
    assert x[0] == 0.7 + 0.1j and it == 1
    x, it = solve_phi_fixed_point(ctx, np.zeros(1))
    assert x[0] == 0 and it == 0
    x, _ = solve_phi_fixed_point(_ScalarCtx(0.5), np.array([1.0]))
    assert x[0] == pytest.approx(2.0, rel=1e-11)


def test_fixed_point_rejects_expansion():
    with pytest.raises(ContractionFailure):
        solve_phi_fixed_point(_ScalarCtx(1.1), np.array([1.0]))
    with pytest.raises(ContractionFailure):
        solve_phi_fixed_point(_ScalarCtx(0.999999), np.array([1.0]), maxiter=100)


def test_linearity(rng):
    A = random_operator(rng, 3)
    K = random_boundary(rng, A, 0.5)
    g = GridSpec.default_for(A)
    solver = PrincipalSolver(A, K, g)
    f = random_rhs(rng, g, 3).sample(g)
    h = random_rhs(rng, g, 3).sample(g)
    a, b = 1.7, -0.6
    lhs = solver.solve(a * f + b * h).u.values
    rhs = a * solver.solve(f).u.values + b * solver.solve(h).u.values
    assert np.abs(lhs - rhs).max() <= 1e-8 * np.abs(rhs).max()


def test_output_is_real_and_certified(rng):
    A = random_operator(rng, 4)
    K = random_boundary(rng, A, 0.6)
    g = GridSpec.default_for(A)
    solver = PrincipalSolver(A, K, g)
    f = random_rhs(rng, g, 4).sample(g)
    u = solver.solve(f)
    assert not np.iscomplexobj(u.u.values)
    info = solver.info
    assert info.residual <= 1e-6 * info.f_norm
    assert info.bc0 <= 1e-6 and info.bc1 <= 1e-6 * max(1, w23_norm(u))
    res = p0_apply(u).values - f.values
    assert l2_norm_values(res, g.dt) == pytest.approx(info.residual)


def test_residual_exceeded_carries_values():
    g = GridSpec(40.0, 256)
    with pytest.raises(ResidualExceeded) as exc:
        PrincipalSolver(A1, BoundaryOperator(), g, tol=1e-18).solve(exp_rhs(g))
    assert exc.value.achieved["residual"] > 0


def test_boundary_violation_carries_values():
    g = GridSpec(40.0, 256)
    solver = PrincipalSolver(A1, BoundaryOperator(), g)
    with pytest.raises(BoundaryConditionViolated) as exc:
        solver._check(PrincipalInfo(residual=0.0, f_norm=1.0, bc0=1.0, bc1=0.0, w23=1.0))
    assert exc.value.achieved["bc0"] == 1.0


def test_concurrent_solves_match_serial(rng):
    A = random_operator(rng, 3)
    K = random_boundary(rng, A, 0.4)
    g = GridSpec.default_for(A, N=1024)
    solver = PrincipalSolver(A, K, g)
    fs = [random_rhs(rng, g, 3).sample(g) for _ in range(8)]
    serial = [solver.solve(f).u.values for f in fs]
    with ThreadPoolExecutor(4) as pool:
        threaded = list(pool.map(lambda f: solver.solve(f).u.values, fs))
    for a, b in zip(serial, threaded):
        np.testing.assert_array_equal(a, b)
