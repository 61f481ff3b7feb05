import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opde3.function_space import (DecayWarning, GridFunction, GridSpec, W23Element,
                                  derivative_consistency, differentiate, from_csv, l2_inner_re,
                                  l2_norm, sample_at, to_csv, trace, w23_norm)
from opde3.spectral import make_operator

S3 = np.sqrt(3.0)
A1 = make_operator([[1.0]])


def exp_element(A, grid, rate=1.0):
    t = grid.times
    e = np.exp(-rate * t)
    parts = [GridFunction.from_real(grid, (-rate) ** k * e) for k in range(4)]
    return W23Element.from_derivatives(A, *parts)


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(10.0, 1000)
    with pytest.raises(ValueError):
        GridSpec(10.0, 128)
    with pytest.raises(ValueError):
        GridSpec(-1.0)
    with pytest.raises(ValueError):
        GridSpec(10.0, 256, 1)
    g = GridSpec(10.0, 256)
    assert g.dt == pytest.approx(10.0 / 255)
    assert g.times[-1] == pytest.approx(10.0)


def test_default_grid():
    assert GridSpec.default_for(make_operator([[2.0]])).T == 20.0
    assert GridSpec.default_for(make_operator([[8.0]])).T == 10.0
    assert GridSpec.default_for(make_operator([[0.5]])).N == 4096


def test_public_constructor_rejects_complex():
    with pytest.raises(TypeError):
        GridFunction.from_real(GridSpec(1.0, 256), np.ones(256) * 1j)


def test_l2_norm_zero():
    g = GridSpec(10.0, 256)
    assert l2_norm(GridFunction.from_real(g, np.zeros(256))) == 0.0


def test_l2_norm_exponential():
    g = GridSpec(30.0, 16384)
    f = GridFunction.from_callable(g, lambda t: np.exp(-t))
    assert l2_norm(f) == pytest.approx(1 / np.sqrt(2), abs=1e-6)


def test_l2_norm_damped_sine():
    g = GridSpec(60.0, 4096)
    f = GridFunction.from_callable(g, lambda t: np.exp(-t / 2) * np.sin(S3 * t / 2))
    assert l2_norm(f) == pytest.approx(np.sqrt(3 / 8), abs=1e-6)


@pytest.mark.parametrize("rate", [0.5, 1.0, 2.0, 4.0])
def test_quadrature_convergence(rate):
    exact = np.sqrt(1 / (2 * rate))
    errs = []
    for N in (512, 1024, 2048):
        g = GridSpec(60.0 / rate, N)
        errs.append(abs(l2_norm(GridFunction.from_callable(g, lambda t: np.exp(-rate * t))) - exact))
    assert errs[0] / errs[1] >= 3 and errs[1] / errs[2] >= 3


def test_parseval_consistency():
    # endpoint-vanishing samples, so the trapezoid and rectangle sums coincide
    g = GridSpec(40.0, 2048)
    vals = np.column_stack([g.times ** 2 * np.exp(-g.times), np.sin(g.times) * np.exp(-0.5 * g.times)])
    f = GridFunction.from_real(g, vals)
    M = 2 * g.pad_factor * g.N
    padded = np.zeros((M, 2))
    padded[:g.N] = vals
    F = np.fft.fft(padded, axis=0)
    spectral = np.sqrt(g.dt / M * np.sum(np.abs(F) ** 2))
    assert l2_norm(f) == pytest.approx(spectral, rel=1e-6)


def test_decay_warning():
    g = GridSpec(5.0, 256)
    f = GridFunction.from_callable(g, lambda t: np.exp(-0.1 * t))
    assert not f.decay_ok
    with pytest.warns(DecayWarning):
        l2_norm(f)


def test_endpoint_corrected_inner_product():
    errs = []
    for N in (512, 1024, 2048):
        g = GridSpec(40.0, N)
        f = GridFunction.from_callable(g, lambda t: np.exp(-t))
        plain = abs(l2_inner_re(f, f) - 0.5)
        assert plain == pytest.approx(g.dt ** 2 / 6, rel=1e-2)
        errs.append(abs(l2_inner_re(f, f, endpoint_correction=True) - 0.5))
        assert errs[-1] < 1e-2 * plain
    # fourth order
    assert errs[0] / errs[1] > 12 and errs[1] / errs[2] > 12


def test_w23_norm_examples():
    g = GridSpec(30.0, 8192)
    assert w23_norm(exp_element(A1, g)) == pytest.approx(1.0, abs=1e-5)
    assert w23_norm(exp_element(make_operator([[2.0]]), g)) == pytest.approx(np.sqrt(65 / 2), abs=1e-4)
    zero = W23Element.from_samples(A1, GridFunction.from_real(g, np.zeros(g.N)))
    assert w23_norm(zero) == 0.0


def test_differentiate_linear():
    g = GridSpec(10.0, 256)
    d = differentiate(GridFunction.from_callable(g, lambda t: t), 1).values[:, 0]
    np.testing.assert_allclose(d, 1.0, atol=1e-9)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_differentiate_constant(order):
    g = GridSpec(10.0, 256)
    d = differentiate(GridFunction.from_real(g, np.full(256, 3.5)), order).values
    np.testing.assert_allclose(d, 0.0, atol=1e-8)


def test_differentiate_exponential_third():
    g = GridSpec(10.0, 1024)
    d3 = differentiate(GridFunction.from_callable(g, lambda t: np.exp(-t)), 3).values[3:-3, 0]
    exact = -np.exp(-g.times[3:-3])
    assert np.abs(d3 - exact).max() <= 1e-5 * np.abs(exact).max()
    head = g.times[3:-3] <= 5.0
    assert np.all(np.abs(d3 - exact)[head] <= 1e-5 * np.abs(exact)[head])


@pytest.mark.parametrize("order", [1, 2, 3])
def test_boundary_stencils_are_accurate(order):
    g = GridSpec(10.0, 1024)
    d = differentiate(GridFunction.from_callable(g, lambda t: np.cos(t)), order).values[:, 0]
    exact = np.cos(g.times + order * np.pi / 2)
    assert np.abs(d - exact).max() < 1e-5


def test_differentiate_complex():
    g = GridSpec(10.0, 512)
    f = GridFunction(g, np.exp((-1 + 2j) * g.times))
    d = differentiate(f, 1).values[:, 0]
    np.testing.assert_allclose(d, (-1 + 2j) * f.values[:, 0], atol=1e-5)


def test_derivative_consistency():
    g = GridSpec(30.0, 4096)
    u = exp_element(A1, g)
    for order in (1, 2, 3):
        assert derivative_consistency(u, order) <= 1e-6


def test_from_samples_matches_exact():
    g = GridSpec(30.0, 4096)
    u = W23Element.from_samples(A1, exp_element(A1, g).u)
    assert w23_norm(u) == pytest.approx(1.0, abs=1e-5)


def test_traces():
    g = GridSpec(30.0, 4096)
    u = W23Element.from_samples(A1, GridFunction.from_callable(g, lambda t: t * np.exp(-t)))
    v0, s0 = trace(u, A1, 0)
    v1, s1 = trace(u, A1, 1)
    assert (s0, s1) == (2.5, 1.5)
    assert v0[0] == 0.0
    assert v1[0] == pytest.approx(1.0, abs=1e-6)
    w = W23Element.from_samples(A1, GridFunction.from_callable(g, lambda t: t ** 2 * np.exp(-t)))
    assert abs(trace(w, A1, 1).value[0]) <= 1e-6


@given(st.floats(0.0, 9.9))
def test_sample_at(t):
    g = GridSpec(10.0, 1024)
    f = GridFunction.from_callable(g, lambda s: np.column_stack([np.sin(s), np.exp(-s)]))
    np.testing.assert_allclose(sample_at(f, t), [np.sin(t), np.exp(-t)], atol=1e-9)


def test_sample_at_nodes_exact():
    g = GridSpec(10.0, 256)
    f = GridFunction.from_callable(g, np.sin)
    for k in (0, 17, 255):
        assert sample_at(f, g.times[k])[0] == f.values[k, 0]


def test_csv_round_trip(tmp_path):
    g = GridSpec(12.0, 512)
    vals = np.column_stack([np.exp(-g.times), g.times * np.exp(-g.times)])
    path = tmp_path / "f.csv"
    to_csv(GridFunction.from_real(g, vals), path)
    assert path.read_text().splitlines()[0] == "t,re_u1,re_u2"
    back = from_csv(path)
    assert back.grid.N == 512 and back.grid.T == pytest.approx(12.0)
    np.testing.assert_allclose(back.values, vals, rtol=1e-12, atol=1e-300)


def test_csv_rejects_nonuniform(tmp_path):
    path = tmp_path / "bad.csv"
    t = np.sort(np.random.default_rng(0).uniform(0, 1, 256))
    t[0] = 0.0
    np.savetxt(path, np.column_stack([t, t]), delimiter=",", header="t,re_u1", comments="")
    with pytest.raises(ValueError):
        from_csv(path)
