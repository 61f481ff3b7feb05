import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opde3 import _backend, _pykernels
from opde3.function_space import _stencils

try:
    from opde3 import _ckernels
except ImportError:  # pragma: no cover - extension not built
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")


def _sym(seed, n):
    m = np.random.default_rng(seed).standard_normal((n, n))
    return m + m.T


@needs_ext
@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
def test_jacobi_backends_agree(seed, n):
    a = _sym(seed, n)
    wc, vc = _ckernels.jacobi_eigh(a)
    wp, vp = _pykernels.jacobi_eigh(a)
    np.testing.assert_allclose(wc, wp, rtol=1e-12, atol=1e-12)
    # eigenvectors up to sign; compare projectors
    np.testing.assert_allclose(np.abs(np.sum(vc * vp, axis=0)), 1.0, atol=1e-8)


@pytest.mark.parametrize("name", ["python", pytest.param("cython", marks=needs_ext)])
def test_jacobi_matches_lapack(name):
    kern = _backend.get_kernels(name)
    for seed in range(5):
        a = _sym(seed, 9)
        w, v = kern.jacobi_eigh(a)
        np.testing.assert_allclose(w, np.linalg.eigvalsh(a), rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(v @ np.diag(w) @ v.T, a, atol=1e-11)
        np.testing.assert_allclose(v.T @ v, np.eye(9), atol=1e-12)


@needs_ext
@pytest.mark.parametrize("order", [1, 2, 3])
def test_stencil_backends_agree(order, rng):
    vals = rng.standard_normal((300, 4))
    center, edge = _stencils(order)
    sign = (-1.0) ** order
    a = _ckernels.stencil_apply(vals, center, edge, sign, 0.01 ** order)
    b = _pykernels.stencil_apply(vals, center, edge, sign, 0.01 ** order)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-9)


@needs_ext
def test_trapezoid_backends_agree(rng):
    a = rng.standard_normal((513, 6))
    b = rng.standard_normal((513, 6))
    assert _ckernels.trapezoid_sq(a, 0.1) == pytest.approx(_pykernels.trapezoid_sq(a, 0.1), rel=1e-13)
    assert _ckernels.trapezoid_dot(a, b, 0.1) == pytest.approx(
        _pykernels.trapezoid_dot(a, b, 0.1), rel=1e-12)


def test_trapezoid_against_numpy(rng):
    a = rng.standard_normal((100, 3))
    sq = np.sum(a * a, axis=1)
    assert _backend.kernels.trapezoid_sq(a, 0.5) == pytest.approx(np.trapezoid(sq, dx=0.5))


def test_pure_python_switch():
    env = dict(os.environ, OPDE3_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from opde3 import _backend; print(_backend.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_get_kernels():
    assert _backend.get_kernels("python") is _pykernels
    with pytest.raises(ValueError):
        _backend.get_kernels("fortran")


def test_benchmark_cases_agree():
    import importlib.util
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    bench = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(bench)
    from opde3._backend import get_kernels
    py, cy = get_kernels("python"), get_kernels("cython")
    for name, fn in bench.cases(np.random.default_rng(1)):
        if name.startswith("jacobi_eigh n=64"):
            continue
        a, b = fn(py), fn(cy)
        if name.startswith("jacobi"):
            assert np.allclose(np.sort(a[0]), np.sort(b[0]), atol=1e-12), name
        else:
            assert np.allclose(a, b, rtol=1e-12, atol=1e-12), name
