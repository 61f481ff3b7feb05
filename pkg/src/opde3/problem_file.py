"""Loading and validating JSON problem files."""
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .boundary import BoundaryOperator
from .function_space import GridFunction, GridSpec, from_csv
from .perturbed import Perturbation
from .sampling import ExpPoly
from .spectral import make_operator

DEFAULT_TOL = 1e-6


class ProblemFileError(ValueError):
    """Schema, shape or IO problem in a problem file."""


def _schema():
    text = resources.files(__package__).joinpath("schema/problem.schema.json").read_text()
    return json.loads(text)


@dataclass
class Problem:
    A: object
    K: BoundaryOperator
    perturbation: Perturbation
    f: GridFunction
    grid: GridSpec
    tol: float
    rhs: object = None  # ExpPoly when f was given as an expression
    oracle_free: bool = False

    @property
    def n(self):
        return self.A.dim


def _matrix(cfg, key, n):
    m = np.asarray(cfg[key], dtype=np.float64)
    if m.shape != (n, n):
        raise ProblemFileError(f"{key} must be {n}x{n}, got shape {m.shape}")
    return m


def parse(cfg, base_dir="."):
    """Validate a decoded problem dictionary and build a :class:`Problem`."""
    try:
        jsonschema.validate(cfg, _schema())
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ProblemFileError(f"schema error at {loc}: {exc.message}") from None
    n = cfg["n"]
    try:
        A = make_operator(_matrix(cfg, "A", n))
    except ValueError as exc:
        raise ProblemFileError(f"A: {exc}") from None
    B = {k: _matrix(cfg, k, n) for k in ("B1", "B2", "B3") if k in cfg}
    perturbation = Perturbation.from_matrices(n, **B)
    for i, e in enumerate(cfg.get("K", [])):
        if np.shape(e["c"]) != (n, n):
            raise ProblemFileError(f"K[{i}].c must be {n}x{n}")
    K = BoundaryOperator.from_config(cfg.get("K", []), cfg.get("kappa_cert"))
    g = cfg.get("grid", {})
    fcfg = cfg.get("f")
    rhs, oracle_free = None, False
    if fcfg is not None and fcfg["type"] == "samples":
        path = Path(base_dir) / fcfg["path"]
        try:
            f = from_csv(path, g.get("pad_factor", 2))
        except (OSError, ValueError) as exc:
            raise ProblemFileError(f"f samples: {exc}") from None
        if f.dim != n:
            raise ProblemFileError(f"f samples have {f.dim} components, expected {n}")
        for key in ("T", "N"):
            if key in g and not np.isclose(g[key], getattr(f.grid, key)):
                raise ProblemFileError(f"grid.{key} disagrees with the sampled f")
        grid = f.grid
        oracle_free = True
    else:
        try:
            grid = GridSpec.default_for(A, g.get("T"), g.get("N"), g.get("pad_factor"))
        except ValueError as exc:
            raise ProblemFileError(f"grid: {exc}") from None
        terms = fcfg["terms"] if fcfg else []
        for i, t in enumerate(terms):
            if len(t["coeff_vector"]) != n:
                raise ProblemFileError(f"f.terms[{i}].coeff_vector must have length {n}")
        if terms:
            rhs = ExpPoly.from_config(terms)
            f = rhs.sample(grid)
        else:
            f = GridFunction.from_real(grid, np.zeros((grid.N, n)))
    try:
        K.check_grid(grid)
    except ValueError as exc:
        raise ProblemFileError(str(exc)) from None
    return Problem(A, K, perturbation, f, grid, float(cfg.get("tol", DEFAULT_TOL)),
                   rhs, oracle_free)


def load(path):
    """Read and parse a problem file; CSV paths are relative to the file."""
    path = Path(path)
    try:
        cfg = json.loads(path.read_text())
    except OSError as exc:
        raise ProblemFileError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return parse(cfg, path.parent)
