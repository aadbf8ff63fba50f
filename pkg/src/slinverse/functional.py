"""Least-squares spectral misfit and its gradient.

``G(q) = sum w_{i,n} (lambda_{q,i,n} - lambda_{Q,i,n})^2`` over a finite index
set. Because the derivative of an eigenvalue in direction ``h`` is
``int h g^2``, the L2 gradient is ``2 sum w r g^2`` with ``g`` the normalized
eigenfunction; no adjoint solve is needed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, NamedTuple

import numpy as np

from . import forward
from .forward import BoundaryTriple, EigenSolution
from .grid import GridFunction, axpy, inner, mean, project

__all__ = [
    "SpectralIndex",
    "TargetSpectra",
    "WeightScheme",
    "MissingWeight",
    "FunctionalEval",
    "InterlacingReport",
    "weight_of",
    "synthesize",
    "evaluate",
    "evaluate_tilde",
    "objective_value",
    "gradient_check",
    "validate_interlacing",
]


class SpectralIndex(NamedTuple):
    i: int
    n: int


class MissingWeight(KeyError):
    pass


@dataclass(frozen=True)
class TargetSpectra:
    """Given eigenvalues ``lambda_{Q,i,n}`` for a (possibly partial) index set."""

    entries: Mapping[SpectralIndex, float]
    bc: BoundaryTriple = forward.DEFAULT_BC
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        clean = {}
        for key, lam in self.entries.items():
            idx = SpectralIndex(int(key[0]), int(key[1]))
            if idx.i not in (1, 2) or idx.n < 0:
                raise ValueError(f"invalid spectral index {tuple(key)!r}")
            if not math.isfinite(lam):
                raise ValueError(f"eigenvalue for {tuple(idx)} is not finite")
            clean[idx] = float(lam)
        if not clean:
            raise ValueError("target spectra must not be empty")
        for i in (1, 2):
            ns = sorted(n for (j, n) in clean if j == i)
            lams = [clean[SpectralIndex(i, n)] for n in ns]
            if any(b <= a for a, b in zip(lams, lams[1:])):
                raise ValueError(f"spectrum {i} is not strictly increasing in n")
        object.__setattr__(self, "entries", dict(sorted(clean.items())))

    @property
    def indices(self) -> list[SpectralIndex]:
        return list(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def spectrum(self, i: int) -> dict[int, float]:
        return {n: lam for (j, n), lam in self.entries.items() if j == i}

    def shifted(self, delta: float) -> TargetSpectra:
        return TargetSpectra({k: v + delta for k, v in self.entries.items()}, self.bc, dict(self.provenance))

    def to_dict(self) -> dict:
        return {
            "bc": self.bc.to_dict(),
            "entries": [{"i": k.i, "n": k.n, "lambda": v} for k, v in self.entries.items()],
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, data: dict) -> TargetSpectra:
        entries = {SpectralIndex(int(e["i"]), int(e["n"])): float(e["lambda"]) for e in data["entries"]}
        if len(entries) != len(data["entries"]):
            raise ValueError("duplicate (i, n) entries in spectra data")
        bc = BoundaryTriple.from_dict(data["bc"]) if "bc" in data else forward.DEFAULT_BC
        return cls(entries, bc, dict(data.get("provenance", {})))

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def from_json(cls, path) -> TargetSpectra:
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class WeightScheme:
    """Positive weights ``w_{i,n}``: ``uniform``, ``invsq`` = (n+1)^-2, or ``custom``."""

    kind: str = "uniform"
    custom: Mapping[SpectralIndex, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("uniform", "invsq", "custom"):
            raise ValueError(f"unknown weight scheme {self.kind!r}")
        if any(not (w > 0.0) for w in self.custom.values()):
            raise ValueError("weights must be positive")

    @classmethod
    def uniform(cls) -> WeightScheme:
        return cls("uniform")

    @classmethod
    def inverse_square(cls) -> WeightScheme:
        return cls("invsq")

    @classmethod
    def from_mapping(cls, weights: Mapping) -> WeightScheme:
        return cls("custom", {SpectralIndex(*k): float(v) for k, v in weights.items()})


UNIFORM = WeightScheme.uniform()


def weight_of(scheme: WeightScheme, idx) -> float:
    if scheme.kind == "uniform":
        return 1.0
    if scheme.kind == "invsq":
        return 1.0 / (idx[1] + 1) ** 2
    try:
        return scheme.custom[SpectralIndex(*idx)]
    except KeyError:
        raise MissingWeight(f"no weight for index {tuple(idx)}") from None


@dataclass(frozen=True)
class FunctionalEval:
    """Value, residuals and L2 gradient of the misfit at one potential."""

    value: float
    residuals: dict[SpectralIndex, float]
    gradient: GridFunction
    eigensolutions: dict[SpectralIndex, EigenSolution] = field(repr=False)
    weights: dict[SpectralIndex, float] = field(repr=False)
    tilde: bool = False

    @property
    def lambdas(self) -> dict[SpectralIndex, float]:
        return {k: es.lam for k, es in self.eigensolutions.items()}

    def kernel(self, idx: SpectralIndex) -> GridFunction:
        """Gradient of the idx-th residual: ``g^2`` (or ``g^2 - 1`` for the tilde form)."""
        g2 = self.eigensolutions[idx].g_squared
        return GridFunction(g2.values - 1.0) if self.tilde else g2


def synthesize(Q: GridFunction, bc: BoundaryTriple = forward.DEFAULT_BC, n_pairs: int = 30,
               indices=None, provenance: dict | None = None) -> TargetSpectra:
    """Eigenvalues of ``Q`` for ``n < n_pairs`` in both spectra (or the given indices)."""
    if indices is None:
        indices = [SpectralIndex(i, n) for i in (1, 2) for n in range(n_pairs)]
    entries = {SpectralIndex(*idx): forward.eigenvalue(Q, bc, idx[0], idx[1]) for idx in indices}
    return TargetSpectra(entries, bc, provenance or {})


def _guess(guesses, idx):
    if guesses is None:
        return None
    return guesses.get(idx)


def _assemble(q: GridFunction, sols: dict, coefs: dict, tilde: bool) -> GridFunction:
    # sum of coef * g^2 (or g^2 - 1) on each solution's fine grid, projected
    # onto q's spline space so inner(grad, h) is the directional derivative
    acc: dict[int, np.ndarray] = {}
    for idx, es in sols.items():
        kern = es.density - 1.0 if tilde else es.density
        if es.refine in acc:
            acc[es.refine] += coefs[idx] * kern
        else:
            acc[es.refine] = coefs[idx] * kern
    return project(acc, q.n_intervals)


def evaluate(q: GridFunction, targets: TargetSpectra, weights: WeightScheme = UNIFORM,
             guesses: Mapping | None = None) -> FunctionalEval:
    """Misfit ``G(q)`` with residuals, eigenpairs and ``grad G = 2 sum w r g^2``.

    ``guesses`` maps indices to eigenvalue estimates used to warm-start the
    forward solver. Any solver failure propagates.
    """
    sols = {}
    residuals = {}
    wts = {}
    value = 0.0
    for idx, lam_target in targets.entries.items():
        es = forward.eigenfunction(q, targets.bc, idx.i, idx.n, guess=_guess(guesses, idx))
        w = weight_of(weights, idx)
        r = es.lam - lam_target
        sols[idx], residuals[idx], wts[idx] = es, r, w
        value += w * r * r
    grad = _assemble(q, sols, {k: 2.0 * wts[k] * residuals[k] for k in sols}, tilde=False)
    return FunctionalEval(value, residuals, grad, sols, wts)


def evaluate_tilde(q: GridFunction, targets: TargetSpectra, weights: WeightScheme = UNIFORM,
                   mean_Q: float = 0.0, guesses: Mapping | None = None) -> FunctionalEval:
    """Mean-corrected misfit with residuals ``lambda_q - lambda_Q + int(Q - q)``.

    Its gradient ``2 sum w r (g^2 - 1)`` integrates to zero, so descent keeps
    the mean of ``q`` fixed.
    """
    shift = mean_Q - mean(q)
    sols = {}
    residuals = {}
    wts = {}
    value = 0.0
    for idx, lam_target in targets.entries.items():
        es = forward.eigenfunction(q, targets.bc, idx.i, idx.n, guess=_guess(guesses, idx))
        w = weight_of(weights, idx)
        r = es.lam - lam_target + shift
        sols[idx], residuals[idx], wts[idx] = es, r, w
        value += w * r * r
    grad = _assemble(q, sols, {k: 2.0 * wts[k] * residuals[k] for k in sols}, tilde=True)
    return FunctionalEval(value, residuals, grad, sols, wts, tilde=True)


def objective_value(q: GridFunction, targets: TargetSpectra, weights: WeightScheme = UNIFORM,
                    guesses: Mapping | None = None, mean_Q: float | None = None):
    """Value only (no eigenfunctions); returns ``(value, lambdas)``.

    With ``mean_Q`` the mean-corrected form is evaluated.
    """
    shift = 0.0 if mean_Q is None else mean_Q - mean(q)
    lambdas = {}
    value = 0.0
    for idx, lam_target in targets.entries.items():
        lam = forward.eigenvalue(q, targets.bc, idx.i, idx.n, guess=_guess(guesses, idx))
        r = lam - lam_target + shift
        lambdas[idx] = lam
        value += weight_of(weights, idx) * r * r
    return value, lambdas


def gradient_check(q: GridFunction, targets: TargetSpectra, weights: WeightScheme, h: GridFunction,
                   epsilon: float = 1e-5, mean_Q: float | None = None) -> tuple[float, float]:
    """``(inner(grad G, h), central difference of G along h)``."""
    if not epsilon > 0.0:
        raise ValueError("epsilon must be positive")
    if mean_Q is None:
        ev = evaluate(q, targets, weights)
    else:
        ev = evaluate_tilde(q, targets, weights, mean_Q)
    analytic = inner(ev.gradient, h)
    guesses = ev.lambdas
    plus, _ = objective_value(axpy(epsilon, h, q), targets, weights, guesses, mean_Q)
    minus, _ = objective_value(axpy(-epsilon, h, q), targets, weights, guesses, mean_Q)
    return analytic, (plus - minus) / (2.0 * epsilon)


@dataclass(frozen=True)
class InterlacingReport:
    holds: bool
    pattern: str | None  # "1<2" for lambda_1n < lambda_2n < lambda_1,n+1, "2<1" otherwise
    violations: list[SpectralIndex]

    def __bool__(self) -> bool:
        return self.holds


def _pattern_violations(low: dict, high: dict, low_i: int) -> list[SpectralIndex]:
    # checks low[n] < high[n] < low[n + 1] wherever the entries exist
    bad = set()
    for n, lam in high.items():
        if n in low and not low[n] < lam:
            bad.add(SpectralIndex(low_i, n))
        if n + 1 in low and not lam < low[n + 1]:
            bad.add(SpectralIndex(3 - low_i, n))
    return sorted(bad)


def validate_interlacing(targets: TargetSpectra) -> InterlacingReport:
    """Check the necessary alternation of the two spectra.

    Violations are reported for the better-matching pattern; nothing raises.
    """
    s1, s2 = targets.spectrum(1), targets.spectrum(2)
    v12 = _pattern_violations(s1, s2, 1)
    v21 = _pattern_violations(s2, s1, 2)
    if not v12:
        return InterlacingReport(True, "1<2", [])
    if not v21:
        return InterlacingReport(True, "2<1", [])
    if len(v21) < len(v12):
        return InterlacingReport(False, "2<1", v21)
    return InterlacingReport(False, "1<2", v12)
