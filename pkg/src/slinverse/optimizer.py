"""Polak-Ribiere conjugate gradient descent on the spectral misfit.

Directions live in the same L2 grid-function space as the potential. The
line search brackets a minimum along ``q - alpha d`` and refines it with
Brent's parabolic/golden hybrid; the first trial step comes from the
Gauss-Newton model of the misfit, which is nearly exact for this problem.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import functional as fn
from .forward import SolverError
from .functional import FunctionalEval, TargetSpectra, WeightScheme
from .grid import GridFunction, axpy, inner, l2_norm

__all__ = [
    "Mode",
    "Termination",
    "NoDescent",
    "OptimizerConfig",
    "IterationRecord",
    "ReconstructionReport",
    "line_search",
    "minimize",
    "metrics",
    "TRACE_HEADER",
]

GOLDEN = 0.5 * (3.0 - math.sqrt(5.0))
TRACE_HEADER = ("iteration", "g_value", "delta2", "delta_lambda", "step_size")


class Mode(str, enum.Enum):
    PRCG = "prcg"
    STEEPEST_DESCENT = "sd"


class Termination(str, enum.Enum):
    TOLERANCE = "Tolerance"
    MAX_ITERATIONS = "MaxIterations"
    STALLED = "Stalled"
    SOLVER_FAILURE = "SolverFailure"


class NoDescent(RuntimeError):
    """The search direction does not decrease the objective."""


@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int = 500
    g_tolerance: float = 1e-18
    mode: Mode = Mode.PRCG
    restart_period: int = 20
    line_search_tolerance: float = 1e-3
    # consecutive steps with relative decrease below stall_decrease => Stalled
    stall_steps: int = 3
    stall_decrease: float = 1e-14

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if not self.g_tolerance > 0.0:
            raise ValueError("g_tolerance must be positive")
        if self.restart_period < 1:
            raise ValueError("restart_period must be at least 1")
        if not self.line_search_tolerance > 0.0:
            raise ValueError("line_search_tolerance must be positive")

    def to_dict(self) -> dict:
        return {
            "max_iterations": self.max_iterations,
            "g_tolerance": self.g_tolerance,
            "mode": self.mode.value,
            "restart_period": self.restart_period,
            "line_search_tolerance": self.line_search_tolerance,
        }


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    g_value: float
    delta2: float | None
    delta_lambda: float
    step_size: float

    def row(self) -> list:
        return [
            self.iteration,
            repr(self.g_value),
            "" if self.delta2 is None else repr(self.delta2),
            repr(self.delta_lambda),
            repr(self.step_size),
        ]


@dataclass
class ReconstructionReport:
    trace: list[IterationRecord]
    final_q: GridFunction
    converged: bool
    termination_reason: Termination
    error: str | None = None
    final_eval: FunctionalEval | None = field(default=None, repr=False)

    @property
    def iterations(self) -> int:
        """Accepted steps; the trace also holds the starting point."""
        return len(self.trace) - 1

    @property
    def final_g(self) -> float:
        return self.trace[-1].g_value

    def first_iteration_below(self, level: float) -> int | None:
        for rec in self.trace:
            if rec.g_value < level:
                return rec.iteration
        return None

    def write_trace_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_HEADER)
            for rec in self.trace:
                writer.writerow(rec.row())


def metrics(q: GridFunction, Q: GridFunction | None, residuals) -> tuple[float | None, float]:
    """``(||q - Q||_2 or None, max |residual|)``."""
    delta2 = None if Q is None else l2_norm(axpy(-1.0, Q, q))
    values = list(residuals.values()) if hasattr(residuals, "values") else list(residuals)
    delta_lambda = max((abs(r) for r in values), default=0.0)
    return delta2, delta_lambda


def line_search(
    phi: Callable[[float], float],
    phi0: float | None = None,
    step: float = 1.0,
    tolerance: float = 1e-3,
    max_evals: int = 60,
    raise_on_no_descent: bool = False,
) -> tuple[float, float]:
    """Minimize ``phi`` over ``alpha >= 0``.

    A minimum is bracketed starting from ``step`` (shrinking while
    ``phi(step) >= phi(0)``, growing by the golden ratio while it decreases)
    and refined with Brent's method to relative width ``tolerance``.
    Returns ``(alpha, phi(alpha))`` with ``phi(alpha) <= phi(0)``; when no
    decrease is found the result is ``(0.0, phi(0))``, or :class:`NoDescent`
    is raised if ``raise_on_no_descent``.
    """
    f0 = phi(0.0) if phi0 is None else phi0
    if not math.isfinite(f0):
        raise ValueError("phi(0) must be finite")
    if not step > 0.0 or not math.isfinite(step):
        step = 1.0
    evals = 0

    def f(x):
        nonlocal evals
        evals += 1
        v = phi(x)
        return v if math.isfinite(v) else math.inf

    # bracket a < b < c with f(b) < f(a), f(b) <= f(c)
    a, fa = 0.0, f0
    b, fb = step, f(step)
    if fb >= fa:
        c, fc = b, fb
        while True:
            b = c * 0.2
            fb = f(b)
            if fb < fa:
                break
            c, fc = b, fb
            if evals >= max_evals // 2 or b < 1e-30:
                if raise_on_no_descent:
                    raise NoDescent(f"no decrease found down to alpha={b:.3g}")
                return 0.0, f0
    else:
        c = b + 1.618034 * (b - a)
        fc = f(c)
        while fc < fb:
            a, fa, b, fb = b, fb, c, fc
            c = b + 1.618034 * (b - a)
            fc = f(c)
            if evals >= max_evals // 2:
                return b, fb
    return _brent(f, a, b, c, fb, tolerance, max_evals - evals)


def _brent(f, a, x, b, fx, tol, budget):
    # Brent's minimization on [a, b] with interior best point x
    w = v = x
    fw = fv = fx
    d = e = 0.0
    for _ in range(max(budget, 1)):
        xm = 0.5 * (a + b)
        tol1 = tol * abs(x) + 1e-300
        tol2 = 2.0 * tol1
        if abs(x - xm) <= tol2 - 0.5 * (b - a):
            break
        if abs(e) > tol1:
            r = (x - w) * (fx - fv)
            qq = (x - v) * (fx - fw)
            p = (x - v) * qq - (x - w) * r
            qq = 2.0 * (qq - r)
            if qq > 0.0:
                p = -p
            qq = abs(qq)
            etemp = e
            e = d
            if abs(p) >= abs(0.5 * qq * etemp) or p <= qq * (a - x) or p >= qq * (b - x):
                e = (a - x) if x >= xm else (b - x)
                d = GOLDEN * e
            else:
                d = p / qq
                u = x + d
                if u - a < tol2 or b - u < tol2:
                    d = math.copysign(tol1, xm - x)
        else:
            e = (a - x) if x >= xm else (b - x)
            d = GOLDEN * e
        u = x + d if abs(d) >= tol1 else x + math.copysign(tol1, d)
        fu = f(u)
        if fu <= fx:
            if u >= x:
                a = x
            else:
                b = x
            v, w, x = w, x, u
            fv, fw, fx = fw, fx, fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v, w = w, u
                fv, fw = fw, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu
    return x, fx


class _Problem:
    """Objective bound to targets and weights; remembers eigenvalues of the best probe."""

    def __init__(self, targets: TargetSpectra, weights: WeightScheme, mean_Q: float | None):
        self.targets = targets
        self.weights = weights
        self.mean_Q = mean_Q
        self.probe_lambdas: dict[float, dict] = {}

    def evaluate(self, q: GridFunction, guesses=None) -> FunctionalEval:
        if self.mean_Q is None:
            return fn.evaluate(q, self.targets, self.weights, guesses)
        return fn.evaluate_tilde(q, self.targets, self.weights, self.mean_Q, guesses)

    def line_function(self, q: GridFunction, d: GridFunction, ev: FunctionalEval):
        slopes = {k: inner(d, es.g_squared) for k, es in ev.eigensolutions.items()}
        lam0 = ev.lambdas
        self.probe_lambdas = {}

        def phi(alpha: float) -> float:
            trial = axpy(-alpha, d, q)
            guesses = {k: lam0[k] - alpha * slopes[k] for k in lam0}
            try:
                value, lams = fn.objective_value(trial, self.targets, self.weights, guesses, self.mean_Q)
            except SolverError:
                return math.inf
            self.probe_lambdas[alpha] = lams
            return value

        return phi

    def gauss_newton_step(self, d: GridFunction, ev: FunctionalEval) -> float:
        # alpha minimizing sum w (r - alpha <d, k>)^2 for residual kernels k
        num = den = 0.0
        for k in ev.eigensolutions:
            a = inner(d, ev.kernel(k))
            w = ev.weights[k]
            num += w * ev.residuals[k] * a
            den += w * a * a
        if den > 0.0 and num > 0.0:
            return num / den
        return 1.0 / max(l2_norm(d), 1e-300)


def minimize(
    q0: GridFunction,
    targets: TargetSpectra,
    weights: WeightScheme = fn.UNIFORM,
    config: OptimizerConfig = OptimizerConfig(),
    Q: GridFunction | None = None,
    mean_Q: float | None = None,
    callback: Callable[[IterationRecord], None] | None = None,
) -> ReconstructionReport:
    """Reconstruct a potential from target spectra starting at ``q0``.

    With ``mean_Q`` the mean-corrected misfit is minimized instead of ``G``.
    ``Q``, when known, is only used for the ``delta2`` metric. Solver failures
    end the run with ``Termination.SOLVER_FAILURE`` and the trace so far.
    """
    problem = _Problem(targets, weights, mean_Q)
    q = q0
    trace: list[IterationRecord] = []

    def record(it, ev, step):
        d2, dl = metrics(q, Q, ev.residuals)
        rec = IterationRecord(it, ev.value, d2, dl, step)
        trace.append(rec)
        if callback is not None:
            callback(rec)

    try:
        ev = problem.evaluate(q)
    except SolverError as exc:
        raise SolverError(f"cannot evaluate the starting potential: {exc}") from exc
    record(0, ev, 0.0)

    def report(reason, error=None):
        return ReconstructionReport(trace, q, reason == Termination.TOLERANCE, reason, error, ev)

    if ev.value < config.g_tolerance:
        return report(Termination.TOLERANCE)

    grad = ev.gradient
    direction = grad
    since_restart = 0
    slow = 0
    for it in range(1, config.max_iterations + 1):
        phi = problem.line_function(q, direction, ev)
        step = problem.gauss_newton_step(direction, ev)
        alpha, value = line_search(phi, ev.value, step, config.line_search_tolerance)
        if not (alpha > 0.0 and value < ev.value):
            if direction is not grad:
                # conjugate direction failed: restart along the gradient
                direction, since_restart = grad, 0
                phi = problem.line_function(q, direction, ev)
                step = problem.gauss_newton_step(direction, ev)
                alpha, value = line_search(phi, ev.value, step, config.line_search_tolerance)
            if not (alpha > 0.0 and value < ev.value):
                return report(Termination.STALLED)
        q_new = axpy(-alpha, direction, q)
        try:
            ev_new = problem.evaluate(q_new, problem.probe_lambdas.get(alpha))
        except SolverError as exc:
            return report(Termination.SOLVER_FAILURE, str(exc))
        if not ev_new.value < ev.value:
            return report(Termination.STALLED)
        slow = slow + 1 if (ev.value - ev_new.value) < config.stall_decrease * ev.value else 0
        q, ev = q_new, ev_new
        record(it, ev, alpha)
        if ev.value < config.g_tolerance:
            return report(Termination.TOLERANCE)
        if slow >= config.stall_steps:
            return report(Termination.STALLED)

        grad_old, grad = grad, ev.gradient
        since_restart += 1
        beta = 0.0
        if config.mode is Mode.PRCG and since_restart < config.restart_period:
            denom = inner(grad_old, grad_old)
            if denom > 0.0:
                beta = max(0.0, (inner(grad, grad) - inner(grad, grad_old)) / denom)
        else:
            since_restart = 0
        if beta > 0.0:
            direction = axpy(beta, direction, grad)
            if not inner(grad, direction) > 0.0:
                direction, since_restart = grad, 0
        else:
            direction = grad
    return report(Termination.MAX_ITERATIONS)
