"""Wronskian identities behind the uniqueness of the two-spectra problem.

``[f, g] = f g' - f' g`` and ``Gamma(f, g) = int_0^1 [f, g] dx``. For the
squared eigenfunctions of one boundary problem ``Gamma(g_n^2, g_m^2)``
vanishes, while the products ``c s`` of the solutions fixed at x = 1 act as a
dual family: ``Gamma(c_{i,n} s_{i,n}, g_{j,m}^2)`` is ``(-1)^i sin(gamma - beta)``
on the diagonal and zero elsewhere. :func:`verify_lemma` checks both
numerically; :func:`independence_probe` measures how far the squared
eigenfunctions are from linear dependence in H^1.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import forward
from .forward import BoundaryTriple
from .grid import GridFunction, _check_same_grid, inner, integrate

__all__ = [
    "GammaResult",
    "IndependenceReport",
    "wronskian_bracket",
    "gamma_form",
    "verify_lemma",
    "independence_probe",
    "write_results_csv",
    "RESULT_HEADER",
]

RESULT_HEADER = ("i", "n", "j", "m", "value", "expected", "abs_error")


@dataclass(frozen=True)
class GammaResult:
    """One evaluated pairing; ``part`` is ``"i"`` (g^2 vs g^2) or ``"ii"`` (c s vs g^2)."""

    part: str
    i: int
    n: int
    j: int
    m: int
    value: float
    expected: float

    @property
    def abs_error(self) -> float:
        return abs(self.value - self.expected)

    def row(self) -> list:
        return [self.i, self.n, self.j, self.m, repr(self.value), repr(self.expected), repr(self.abs_error)]


def wronskian_bracket(f: GridFunction, g: GridFunction, x):
    """``f g' - f' g`` at ``x`` from the spline derivatives."""
    _check_same_grid(f, g)
    return f(x) * g(x, 1) - f(x, 1) * g(x)


def gamma_form(f: GridFunction, g: GridFunction, df: GridFunction | None = None,
               dg: GridFunction | None = None) -> float:
    """``int_0^1 [f, g] dx``.

    Nodal derivatives ``df``/``dg`` may be supplied (e.g. from the
    integrator); otherwise the splines are differentiated.
    """
    _check_same_grid(f, g)
    x = f.nodes
    fp = f(x, 1) if df is None else df.values
    gp = g(x, 1) if dg is None else dg.values
    return integrate(GridFunction(f.values * gp - fp * g.values))


def _square_derivative(es) -> GridFunction:
    return GridFunction(2.0 * es.g.values * es.dg.values)


def verify_lemma(q: GridFunction, bc: BoundaryTriple = forward.DEFAULT_BC, n_max: int = 8) -> list[GammaResult]:
    """Evaluate both relations for the indices ``n, m < n_max``.

    Part (i) pairs ``g_{i,n}^2`` with ``g_{i,m}^2`` inside each spectrum (all
    ``2 n_max^2`` ordered pairs); part (ii) pairs ``c_{i,n} s_{i,n}`` with
    every ``g_{j,m}^2`` (``(2 n_max)^2`` rows). Derivatives are the
    integrator's nodal values.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    sols = {(i, n): forward.eigenfunction(q, bc, i, n) for i in (1, 2) for n in range(n_max)}
    dsq = {k: _square_derivative(es) for k, es in sols.items()}
    out: list[GammaResult] = []
    for i in (1, 2):
        for n in range(n_max):
            for m in range(n_max):
                a, b = (i, n), (i, m)
                val = gamma_form(sols[a].g_squared, sols[b].g_squared, dsq[a], dsq[b])
                out.append(GammaResult("i", i, n, i, m, val, 0.0))
    diag = math.sin(bc.gamma - bc.beta)
    for i in (1, 2):
        for n in range(n_max):
            s, c = forward.right_solutions(q, bc, i, n, sols[i, n].lam)
            cs = c.values * s.values
            dcs = GridFunction(c.derivative.values * s.values.values + c.values.values * s.derivative.values)
            for j in (1, 2):
                for m in range(n_max):
                    b = (j, m)
                    val = gamma_form(cs, sols[b].g_squared, dcs, dsq[b])
                    expected = (-1) ** i * diag if (i, n) == b else 0.0
                    out.append(GammaResult("ii", i, n, j, m, val, expected))
    return out


def write_results_csv(results, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_HEADER)
        for r in results:
            writer.writerow(r.row())


@dataclass(frozen=True)
class IndependenceReport:
    size: int
    min_eigenvalue: float
    max_eigenvalue: float

    @property
    def condition(self) -> float:
        if self.min_eigenvalue <= 0.0:
            return math.inf
        return self.max_eigenvalue / self.min_eigenvalue

    @property
    def independent(self) -> bool:
        return self.min_eigenvalue > 0.0


def independence_probe(q: GridFunction, bc: BoundaryTriple = forward.DEFAULT_BC, n_max: int = 10,
                       duplicate: bool = False) -> IndependenceReport:
    """Spectrum of the H^1 Gram matrix of ``{g_{i,n}^2 : n < n_max}``.

    A finite section only: the independence statement concerns the whole
    family and conditioning worsens with ``n_max``. ``duplicate`` appends a
    copy of the first function, which must make the matrix singular.
    """
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    funcs = []
    for i in (1, 2):
        for n in range(n_max):
            es = forward.eigenfunction(q, bc, i, n)
            funcs.append((es.g_squared, _square_derivative(es)))
    if duplicate:
        funcs.append(funcs[0])
    k = len(funcs)
    gram = np.empty((k, k))
    for a in range(k):
        for b in range(a, k):
            fa, da = funcs[a]
            fb, db = funcs[b]
            gram[a, b] = gram[b, a] = inner(fa, fb) + inner(da, db)
    eig = np.linalg.eigvalsh(gram)
    return IndependenceReport(k, float(eig[0]), float(eig[-1]))
