"""Vector-valued functions on a uniform grid over [0, T].

A :class:`GridFunction` holds ``N`` samples of an ``n``-vector. Norms use the
trapezoid rule; derivatives use fourth-order finite differences with
one-sided stencils at the first and last three points.
"""
import csv
import warnings
from dataclasses import dataclass
from functools import lru_cache
from math import factorial
from typing import NamedTuple

import numpy as np

from ._backend import kernels
from .spectral import apply_power

DEFAULT_TAIL_TOL = 1e-6


class DecayWarning(UserWarning):
    """The sampled function has not decayed at the truncation time T."""


@dataclass(frozen=True)
class GridSpec:
    T: float
    N: int = 4096
    pad_factor: int = 2

    def __post_init__(self):
        if not (self.T > 0 and np.isfinite(self.T)):
            raise ValueError(f"T must be positive, got {self.T}")
        if self.N < 256 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two >= 256, got {self.N}")
        if self.pad_factor < 2:
            raise ValueError(f"pad_factor must be >= 2, got {self.pad_factor}")

    @property
    def dt(self):
        return self.T / (self.N - 1)

    @property
    def times(self):
        return np.arange(self.N) * self.dt

    @classmethod
    def default_for(cls, A, T=None, N=None, pad_factor=None):
        """Grid with T = max(40/mu0, 10) unless overridden."""
        if T is None:
            T = max(40.0 / A.mu0, 10.0)
        return cls(float(T), int(N or 4096), int(pad_factor or 2))


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: GridSpec
    values: np.ndarray
    tail_tol: float = DEFAULT_TAIL_TOL

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != self.grid.N:
            raise ValueError(f"expected {self.grid.N} samples, got shape {v.shape}")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_real(cls, grid, values, tail_tol=DEFAULT_TAIL_TOL):
        v = np.asarray(values)
        if np.iscomplexobj(v):
            raise TypeError("public constructors accept real samples only")
        return cls(grid, v.astype(np.float64), tail_tol)

    @classmethod
    def from_callable(cls, grid, func, tail_tol=DEFAULT_TAIL_TOL):
        """Sample ``func(t) -> (N, n) or (N,)`` on the grid."""
        return cls.from_real(grid, func(grid.times), tail_tol)

    @property
    def dim(self):
        return self.values.shape[1]

    @property
    def times(self):
        return self.grid.times

    @property
    def decay_ok(self):
        norms = np.linalg.norm(self.values, axis=1)
        return bool(norms[-1] <= self.tail_tol * norms.max()) if norms.max() > 0 else True

    def with_values(self, values):
        return GridFunction(self.grid, values, self.tail_tol)

    def __add__(self, other):
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        return self.with_values(self.values - other.values)

    def __mul__(self, scalar):
        return self.with_values(self.values * scalar)

    __rmul__ = __mul__

    @property
    def real(self):
        return self.with_values(self.values.real.copy())

    @property
    def imag(self):
        return self.with_values(self.values.imag.copy())


def zeros(grid, n, dtype=np.float64):
    return GridFunction(grid, np.zeros((grid.N, n), dtype=dtype))


def _as_float(values):
    v = np.ascontiguousarray(values)
    if v.ndim == 1:
        v = v[:, None]
    if np.iscomplexobj(v):
        return v.astype(np.complex128, copy=False).view(np.float64)
    return v.astype(np.float64, copy=False)


def _check_decay(f):
    if not f.decay_ok:
        warnings.warn("function has not decayed at T; L2 norm is truncated", DecayWarning,
                      stacklevel=3)


def l2_norm(f):
    """Trapezoid approximation of the L2(0, T; H) norm."""
    _check_decay(f)
    return l2_norm_values(f.values, f.grid.dt)


def l2_norm_values(values, dt):
    """Trapezoid L2 norm of raw (N, n) samples; no decay check."""
    return float(np.sqrt(max(kernels.trapezoid_sq(_as_float(values), dt), 0.0)))


# Gregory weights minus trapezoid weights at the left end (fourth order)
_GREGORY_LEFT = np.array([-1.0 / 8.0, 1.0 / 6.0, -1.0 / 24.0])


def l2_inner_re(f, g, endpoint_correction=False):
    """Re (f, g)_{L2}, trapezoid rule.

    Parameters
    ----------
    endpoint_correction : bool
        Add Gregory end weights at t = 0, which removes the O(dt^2) term
        the trapezoid rule picks up from a non-vanishing integrand slope
        there. The far end is assumed to have decayed.
    """
    a, b = np.broadcast_arrays(f.values, g.values)
    if np.iscomplexobj(a) or np.iscomplexobj(b):
        a = a.astype(np.complex128)
        b = b.astype(np.complex128)
    dt = f.grid.dt
    val = kernels.trapezoid_dot(_as_float(a), _as_float(b), dt)
    if endpoint_correction:
        head = np.real(np.einsum("ij,ij->i", np.conj(a[:3]), b[:3]))
        val += dt * float(_GREGORY_LEFT @ head)
    return float(val)


@dataclass(frozen=True, eq=False)
class W23Element:
    """A function with its first three derivatives and A^3 u on a common grid."""

    u: GridFunction
    d1: GridFunction
    d2: GridFunction
    d3: GridFunction
    A3u: GridFunction

    @property
    def grid(self):
        return self.u.grid

    def derivative(self, order):
        return (self.u, self.d1, self.d2, self.d3)[order]

    @classmethod
    def from_derivatives(cls, A, u, d1, d2, d3):
        return cls(u, d1, d2, d3, u.with_values(apply_power(A, 3, u.values)))

    @classmethod
    def from_samples(cls, A, u):
        """Build derivatives of ``u`` by finite differences."""
        return cls.from_derivatives(A, u, differentiate(u, 1), differentiate(u, 2),
                                    differentiate(u, 3))

    def combine(self, other, a=1.0, b=1.0):
        return W23Element(*(x.with_values(a * x.values + b * y.values)
                            for x, y in zip(self._parts(), other._parts())))

    def _parts(self):
        return (self.u, self.d1, self.d2, self.d3, self.A3u)

    @property
    def real(self):
        return W23Element(*(p.real for p in self._parts()))

    @property
    def max_imag(self):
        return max(float(np.abs(p.values.imag).max()) if np.iscomplexobj(p.values) else 0.0
                   for p in self._parts())


def w23_norm(u, A=None, warn=True):
    """(||u'''||^2 + ||A^3 u||^2)^(1/2); ``warn=False`` skips the decay check."""
    if not warn:
        dt = u.u.grid.dt
        return float(np.hypot(l2_norm_values(u.d3.values, dt), l2_norm_values(u.A3u.values, dt)))
    a = l2_norm(u.d3)
    b = l2_norm(u.A3u)
    return float(np.hypot(a, b))


def derivative_consistency(u, order=1):
    """Max relative mismatch (interior points) between ``u.derivative(order)``
    and the finite-difference derivative of the samples."""
    fd = differentiate(u.u, order).values[3:-3]
    stored = u.derivative(order).values[3:-3]
    scale = max(np.abs(stored).max(), 1e-300)
    return float(np.abs(fd - stored).max() / scale)


@lru_cache(maxsize=None)
def _fd_weights(offsets, order):
    """Weights w with sum_j w_j p(offset_j) = p^(order)(0) for polynomials of degree < len."""
    x = np.asarray(offsets, dtype=np.float64)
    m = len(x)
    V = np.vander(x, m, increasing=True).T
    rhs = np.zeros(m)
    rhs[order] = factorial(order)
    return np.linalg.solve(V, rhs)


@lru_cache(maxsize=None)
def _stencils(order):
    h = 3 if order == 3 else 2
    center = _fd_weights(tuple(range(-h, h + 1)), order)
    width = order + 4
    edge = np.array([_fd_weights(tuple(i - j for i in range(width)), order) for j in range(3)])
    return center, edge


def differentiate(f, order):
    """Finite-difference derivative of order 1, 2 or 3 (fourth-order accurate)."""
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    center, edge = _stencils(order)
    v = f.values
    cplx = np.iscomplexobj(v)
    raw = kernels.stencil_apply(_as_float(v), center, edge, float((-1) ** order),
                                f.grid.dt ** order)
    if cplx:
        raw = np.ascontiguousarray(raw).view(np.complex128)
    return f.with_values(raw)


class Trace(NamedTuple):
    value: np.ndarray
    scale: float


def trace(u, A=None, which=0):
    """Boundary trace: which=0 gives u(0) in H_{5/2}, which=1 gives u'(0) in H_{3/2}."""
    if which == 0:
        return Trace(u.u.values[0].copy(), 2.5)
    if which == 1:
        return Trace(u.d1.values[0].copy(), 1.5)
    raise ValueError("which must be 0 or 1")


def sample_at(f, t):
    """Value of the grid function at time ``t`` by local cubic interpolation."""
    grid = f.grid
    if t < 0.0 or t > grid.T * (1 + 1e-12):
        raise ValueError(f"t = {t} outside [0, {grid.T}]")
    pos = t / grid.dt
    k = int(round(pos))
    if abs(pos - k) < 1e-9:
        return f.values[min(k, grid.N - 1)].copy()
    lo = min(max(int(np.floor(pos)) - 1, 0), grid.N - 4)
    nodes = np.arange(lo, lo + 4, dtype=np.float64)
    w = np.array([np.prod([(pos - nodes[m]) / (nodes[i] - nodes[m])
                           for m in range(4) if m != i]) for i in range(4)])
    return w @ f.values[lo:lo + 4]


def to_csv(f, path):
    """Write ``t,re_u1..re_un`` rows with %.12e formatting."""
    n = f.dim
    header = ["t"] + [f"re_u{i + 1}" for i in range(n)]
    data = np.column_stack([f.times, np.real(f.values)])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        np.savetxt(fh, data, fmt="%.12e", delimiter=",")


def from_csv(path, pad_factor=2, tail_tol=DEFAULT_TAIL_TOL):
    """Read a CSV written by :func:`to_csv` (uniform grid starting at t=0)."""
    with open(path, newline="") as fh:
        header = next(csv.reader(fh))
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if header[0].strip() != "t" or data.shape[1] != len(header):
        raise ValueError(f"{path}: expected header t,re_u1..re_un")
    t = data[:, 0]
    N = len(t)
    grid = GridSpec(float(t[-1]), N, pad_factor)
    if abs(t[0]) > 1e-12 * grid.T or np.abs(np.diff(t) - grid.dt).max() > 1e-9 * grid.dt + 1e-12:
        raise ValueError(f"{path}: samples must lie on a uniform grid starting at t=0")
    return GridFunction.from_real(grid, data[:, 1:], tail_tol)
