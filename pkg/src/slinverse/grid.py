"""Uniform-grid functions on [0, 1] backed by cubic splines.

Every potential, eigenfunction and gradient in the package is a
:class:`GridFunction`: samples at ``x_k = k / n_intervals`` plus the cubic
spline through them. Evaluation, differentiation and quadrature all go
through the same spline, so ``integrate`` is consistent with ``eval``.
"""

from __future__ import annotations

import csv
import json
import math
from functools import lru_cache
from pathlib import Path
from typing import Callable, Mapping

import numpy as np
from scipy import sparse
from scipy.interpolate import BSpline, CubicSpline, make_interp_spline
from scipy.sparse.linalg import splu

__all__ = [
    "GridError",
    "NonFinite",
    "TooFewSamples",
    "OutOfDomain",
    "GridMismatch",
    "GridFunction",
    "make",
    "sample",
    "eval",
    "derivative",
    "integrate",
    "axpy",
    "l2_norm",
    "mean",
    "inner",
    "project",
]

# slack for x slightly outside [0, 1] from floating point arithmetic
_DOMAIN_SLACK = 1e-12


class GridError(ValueError):
    """Base class for invalid grid operations."""


class NonFinite(GridError):
    pass


class TooFewSamples(GridError):
    pass


class OutOfDomain(GridError):
    pass


class GridMismatch(GridError):
    pass


class GridFunction:
    """A real function on [0, 1] given by samples on a uniform grid.

    The interpolant is a not-a-knot cubic spline. Instances are immutable;
    arithmetic returns new objects.

    Parameters
    ----------
    values : array_like
        Samples at the ``n_intervals + 1`` equispaced nodes, endpoints
        included.
    """

    __slots__ = ("_values", "_spline", "_nodes", "_fine")

    def __init__(self, values):
        arr = np.array(values, dtype=float).ravel()
        if arr.size < 3:
            raise TooFewSamples(f"need at least 3 samples, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise NonFinite("grid function values must be finite")
        arr.setflags(write=False)
        self._values = arr
        self._nodes = np.linspace(0.0, 1.0, arr.size)
        self._nodes.setflags(write=False)
        self._spline = CubicSpline(self._nodes, arr, bc_type="not-a-knot")
        self._fine = {}

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def n_intervals(self) -> int:
        return self._values.size - 1

    @property
    def nodes(self) -> np.ndarray:
        return self._nodes

    @property
    def h(self) -> float:
        return 1.0 / self.n_intervals

    @property
    def spline(self) -> CubicSpline:
        return self._spline

    def fine_samples(self, refine: int) -> np.ndarray:
        """Spline values on the grid refined ``refine`` times (memoized)."""
        cached = self._fine.get(refine)
        if cached is None:
            n = self.n_intervals
            t = np.arange(refine + 1) / refine * self.h
            c = self._spline.c
            pieces = ((c[0][:, None] * t + c[1][:, None]) * t + c[2][:, None]) * t + c[3][:, None]
            cached = np.empty(n * refine + 1)
            cached[:-1] = pieces[:, :-1].ravel()
            cached[-1] = self._values[-1]
            cached.setflags(write=False)
            self._fine[refine] = cached
        return cached

    def __call__(self, x, nu: int = 0):
        x = _check_domain(x)
        out = self._spline(x, nu)
        if nu == 0:
            # exact node reproduction, independent of spline roundoff
            out = _snap_nodes(x, out, self._values)
        return out

    def __add__(self, other: GridFunction) -> GridFunction:
        return axpy(1.0, other, self)

    def __sub__(self, other: GridFunction) -> GridFunction:
        return axpy(-1.0, other, self)

    def __neg__(self) -> GridFunction:
        return GridFunction(-self._values)

    def __mul__(self, other) -> GridFunction:
        if isinstance(other, GridFunction):
            _check_same_grid(self, other)
            return GridFunction(self._values * other._values)
        return GridFunction(self._values * float(other))

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"GridFunction(n_intervals={self.n_intervals})"

    def same_grid(self, other: GridFunction) -> bool:
        return self.n_intervals == other.n_intervals

    def integral(self) -> float:
        return integrate(self)

    def to_dict(self) -> dict:
        return {"n_intervals": self.n_intervals, "values": self._values.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> GridFunction:
        values = data["values"]
        n = data.get("n_intervals", len(values) - 1)
        if len(values) != n + 1:
            raise GridError(
                f"n_intervals={n} does not match {len(values)} samples"
            )
        return cls(values)

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def from_json(cls, path) -> GridFunction:
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "value"])
            for x, v in zip(self._nodes, self._values):
                writer.writerow([repr(float(x)), repr(float(v))])


def _check_domain(x):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < -_DOMAIN_SLACK) or np.any(arr > 1.0 + _DOMAIN_SLACK) or np.any(
        np.isnan(arr)
    ):
        raise OutOfDomain(f"x must lie in [0, 1], got {x!r}")
    return np.clip(arr, 0.0, 1.0)


def _snap_nodes(x, out, values):
    n = values.size - 1
    k = np.rint(x * n)
    hit = np.abs(x * n - k) == 0.0
    if np.ndim(out) == 0:
        return float(values[int(k)]) if hit else float(out)
    out = np.array(out, dtype=float)
    out[hit] = values[k[hit].astype(int)]
    return out


def _check_same_grid(f: GridFunction, g: GridFunction) -> None:
    if f.n_intervals != g.n_intervals:
        raise GridMismatch(
            f"grids differ: {f.n_intervals} vs {g.n_intervals} intervals"
        )


def make(values) -> GridFunction:
    """Build a grid function from node samples."""
    return GridFunction(values)


def sample(func: Callable, n_intervals: int) -> GridFunction:
    """Sample a vectorized callable on the uniform grid with ``n_intervals``."""
    if n_intervals < 2:
        raise TooFewSamples("n_intervals must be at least 2")
    x = np.linspace(0.0, 1.0, n_intervals + 1)
    return GridFunction(np.broadcast_to(func(x), x.shape))


def eval(f: GridFunction, x):  # noqa: A001 - mirrors the operation name
    return f(x)


def derivative(f: GridFunction, x):
    return f(x, 1)


def integrate(f: GridFunction) -> float:
    """Exact integral of the spline over [0, 1]."""
    return float(f.spline.integrate(0.0, 1.0))


def axpy(a: float, f: GridFunction, g: GridFunction) -> GridFunction:
    """Return ``a * f + g`` on the common grid."""
    _check_same_grid(f, g)
    return GridFunction(a * f.values + g.values)


def inner(f: GridFunction, g: GridFunction) -> float:
    """L2 inner product of the two splines, integrated exactly."""
    _check_same_grid(f, g)
    return _spline_product_integral(f.spline.c, g.spline.c, f.h)


def l2_norm(f: GridFunction) -> float:
    return math.sqrt(max(inner(f, f), 0.0))


def mean(f: GridFunction) -> float:
    # [0, 1] has unit length
    return integrate(f)


# Gram matrix of the monomials t^p (p = 0..3) on [0, 1]; local coefficients of
# scipy's PPoly are ordered from t^3 down to t^0.
_MONO_GRAM = np.array(
    [[1.0 / (i + j + 1) for j in (3, 2, 1, 0)] for i in (3, 2, 1, 0)]
)


def _spline_product_integral(cf: np.ndarray, cg: np.ndarray, h: float) -> float:
    # piece k: f = sum_p cf[p,k] (h t)^(3-p), t in [0, 1]
    scale = h ** np.array([3.0, 2.0, 1.0, 0.0])
    a = cf * scale[:, None]
    b = cg * scale[:, None]
    return float(h * np.einsum("pk,pq,qk->", a, _MONO_GRAM, b))


@lru_cache(maxsize=8)
def _bspline_space(n_intervals: int):
    # not-a-knot cubic splines on the nodes, in their local B-spline basis
    nodes = np.linspace(0.0, 1.0, n_intervals + 1)
    knots = make_interp_spline(nodes, np.zeros_like(nodes), k=3).t
    to_values = BSpline.design_matrix(nodes, knots, 3).tocsr()
    gx, gw = np.polynomial.legendre.leggauss(4)
    h = 1.0 / n_intervals
    pts = (nodes[:-1, None] + 0.5 * (gx + 1.0) * h).ravel()
    wts = np.tile(0.5 * h * gw, n_intervals)
    design = BSpline.design_matrix(pts, knots, 3).tocsr()
    mass = (design.T @ sparse.diags(wts) @ design).tocsc()
    return knots, to_values, splu(mass)


@lru_cache(maxsize=32)
def _fine_moments(n_intervals: int, refine: int):
    # quadrature-weighted transpose of the B-spline design matrix on the fine grid
    knots = _bspline_space(n_intervals)[0]
    m = n_intervals * refine
    x = np.linspace(0.0, 1.0, m + 1)
    dx = 1.0 / m
    if m % 2 == 0:
        w = np.full(m + 1, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        w *= dx / 3.0
    else:
        w = np.full(m + 1, dx)
        w[0] = w[-1] = 0.5 * dx
    design = BSpline.design_matrix(x, knots, 3)
    return (design.T @ sparse.diags(w)).tocsr()


def project(samples: Mapping[int, np.ndarray], n_intervals: int) -> GridFunction:
    """L2 projection onto the spline space of the grid.

    ``samples`` maps a refinement factor ``r`` to values on the uniform grid
    of ``n_intervals * r`` cells; the projected function is their sum. Fine
    data are integrated by composite Simpson (trapezoid for odd cell counts),
    so ``inner(project(f), h)`` reproduces that quadrature of ``f * h`` for
    every grid function ``h``.
    """
    if n_intervals < 3:
        raise TooFewSamples("projection needs at least 3 intervals")
    _, to_values, mass = _bspline_space(n_intervals)
    rhs = np.zeros(n_intervals + 1)
    for refine, vals in samples.items():
        vals = np.asarray(vals, dtype=float)
        if vals.shape != (n_intervals * refine + 1,):
            raise GridMismatch(f"expected {n_intervals * refine + 1} samples for refinement {refine}")
        rhs += _fine_moments(n_intervals, refine) @ vals
    return GridFunction(to_values @ mass.solve(rhs))
