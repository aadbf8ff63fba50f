"""Forward Sturm-Liouville solver for ``-u'' + q u = lam u`` on [0, 1].

Eigenvalues are located by shooting on a scaled Prüfer angle: with
``u = rho sin(theta) / sqrt(S)`` and ``u' = rho sqrt(S) cos(theta)`` the angle
obeys ``theta' = S cos^2 + (lam - q)/S sin^2`` and can only cross multiples
of pi upwards, so the n-th eigenvalue is the unique root of
``theta(1; lam) = theta_right + n pi``. Choosing ``S ~ sqrt(lam - mean q)``
keeps the angle almost linear in x, which is what makes a fixed-step RK4
sweep accurate at high index.

The step count of a sweep depends only on the grid, the index ``n`` and a
coarse bound of the potential, never on the trial ``lam``. Eigenvalues are
then smooth functions of ``q`` down to roundoff, which finite-difference
gradient checks and the 1e-18 objective floor both rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import _kernels
from .grid import GridFunction, integrate, mean

__all__ = [
    "SolverError",
    "IntegrationFailure",
    "BracketFailure",
    "InvalidBoundary",
    "BoundaryTriple",
    "EigenSolution",
    "RightSolution",
    "DEFAULT_BC",
    "asymptotic_estimate",
    "pruefer_angle_at_right",
    "eigenvalue",
    "eigenfunction",
    "right_solutions",
    "spectrum",
]

_SIN_ZERO = 1e-12
# largest wavenumber * step product allowed in an RK4 step; see substeps()
_PHASE_PER_STEP = 0.05
_MIN_SUBSTEPS = 2
_MAX_EXPANSIONS = 60


class SolverError(RuntimeError):
    """The forward solver could not produce an eigenpair."""


class IntegrationFailure(SolverError):
    pass


class BracketFailure(SolverError):
    pass


class InvalidBoundary(ValueError):
    pass


@dataclass(frozen=True)
class BoundaryTriple:
    """Angles of ``u(0)cos(alpha) + u'(0)sin(alpha) = 0`` and the two right ends.

    Spectrum 1 uses ``beta`` at x = 1, spectrum 2 uses ``gamma``.
    """

    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = math.pi / 2

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidBoundary(f"{name} must be finite")
        if abs(math.sin(self.beta - self.gamma)) <= _SIN_ZERO:
            raise InvalidBoundary(
                "sin(beta - gamma) must be nonzero; the two spectra would coincide"
            )

    def right_angle(self, spectrum_index: int) -> float:
        if spectrum_index == 1:
            return self.beta
        if spectrum_index == 2:
            return self.gamma
        raise ValueError(f"spectrum_index must be 1 or 2, got {spectrum_index!r}")

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma}

    @classmethod
    def from_dict(cls, data: dict) -> BoundaryTriple:
        return cls(float(data["alpha"]), float(data["beta"]), float(data["gamma"]))


DEFAULT_BC = BoundaryTriple(0.0, 0.0, math.pi / 2)


@dataclass(frozen=True)
class EigenSolution:
    """One eigenvalue with its L2-normalized eigenfunction.

    ``dg`` holds the derivative of the eigenfunction at the grid nodes as
    produced by the integrator (not by differentiating the spline).
    ``density`` is ``g^2`` on the integrator's own grid (``refine`` points per
    interval), normalized there; it is what eigenvalue sensitivities
    ``int h g^2`` are assembled from.
    """

    spectrum_index: int
    n: int
    lam: float
    g: GridFunction
    dg: GridFunction
    g_squared: GridFunction = field(repr=False)
    density: np.ndarray = field(repr=False)
    refine: int = 1

    def sensitivity(self, h: GridFunction) -> float:
        """``int h g^2``, the derivative of the eigenvalue along ``h``.

        Integrated on the fine grid; the nodal ``g_squared`` under-resolves
        high-index eigenfunctions on coarse grids.
        """
        return _simpson(h.fine_samples(self.refine) * self.density)


@dataclass(frozen=True)
class RightSolution:
    """Solution fixed by its data at x = 1 (``kind`` is ``"s"`` or ``"c"``)."""

    kind: str
    n: int
    lam: float
    values: GridFunction
    derivative: GridFunction


def _is_zero(x: float) -> bool:
    return abs(x) <= _SIN_ZERO


def asymptotic_estimate(bc: BoundaryTriple, spectrum_index: int, n: int, mean_q: float = 0.0) -> float:
    """Leading-order eigenvalue asymptotics for the (alpha, beta-or-gamma) problem.

    The remainder is square summable in ``n`` for an L2 potential.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    a = bc.alpha
    b = bc.right_angle(spectrum_index)
    sa, sb = math.sin(a), math.sin(b)
    if not _is_zero(sa) and not _is_zero(sb):
        return math.pi**2 * n**2 - 2.0 * math.sin(b - a) / (sa * sb) + mean_q
    if _is_zero(sa) and _is_zero(sb):
        return math.pi**2 * (n + 1) ** 2 + mean_q
    return math.pi**2 * (n + 0.5) ** 2 + 2.0 * math.cos(a) * math.cos(b) / math.sin(b - a) + mean_q


def _left_phase(alpha: float, s: float) -> float:
    # theta0 in [0, pi) with sin(theta0) cos(alpha) + s cos(theta0) sin(alpha) = 0
    t = math.atan2(-s * math.sin(alpha), math.cos(alpha))
    if t < 0.0:
        t += math.pi
    if t >= math.pi:
        t -= math.pi
    return t


def _right_phase(angle: float, s: float) -> float:
    # target in (0, pi] for the condition at x = 1
    t = math.atan2(-s * math.sin(angle), math.cos(angle))
    if t <= 0.0:
        t += math.pi
    if t > math.pi:
        t -= math.pi
    return t


def substeps(q: GridFunction, n: int) -> int:
    """RK4 steps per grid interval for index ``n`` on potential ``q``.

    Uses the free wavenumber ``pi (n + 1)`` plus the root of the potential's
    oscillation amplitude rounded up to a power of four, so that tiny
    perturbations of ``q`` do not change the discretization.
    """
    amp = float(np.max(np.abs(q.values - mean(q)))) + 1.0
    amp = 4.0 ** math.ceil(math.log(amp, 4.0) - 1e-12)
    k = math.pi * (n + 1) + math.sqrt(amp)
    m = max(_MIN_SUBSTEPS, math.ceil(k * q.h / _PHASE_PER_STEP))
    # even, so Simpson panels on the step grid never straddle a spline knot;
    # otherwise the grid-scale spline mode leaks into the gradient
    return m + (m % 2)


class _Shooter:
    """Phase mismatch ``F(lam)`` for one potential, left angle and right angle."""

    def __init__(self, q: GridFunction, alpha: float, right: float, m: int):
        self.q = q
        self.m = m
        self.qs = q.fine_samples(2 * m)
        self.dx = q.h / (2 * m)
        self.qbar = mean(q)
        self.alpha = alpha
        self.right = right

    def scale(self, lam: float) -> float:
        return math.sqrt(max(lam - self.qbar, 1.0))

    def mismatch(self, lam: float, n: int) -> float:
        s = self.scale(lam)
        dev = _kernels.prufer_deviation(self.qs, self.dx, lam, s, _left_phase(self.alpha, s))
        if not math.isfinite(dev):
            raise IntegrationFailure(f"Prüfer sweep diverged at lambda={lam!r}")
        # theta(1) = s + dev; keep the large terms together
        return (s - n * math.pi - _right_phase(self.right, s)) + dev

    def trace(self, lam: float):
        """Angle and log-amplitude at every RK step point."""
        s = self.scale(lam)
        dev, logrho = _kernels.prufer_trace(self.qs, self.dx, lam, s, _left_phase(self.alpha, s), 1)
        x = np.linspace(0.0, 1.0, dev.size)
        return s, dev + s * x, logrho


def _initial_width(bc: BoundaryTriple, spectrum_index: int, n: int) -> float:
    est = asymptotic_estimate(bc, spectrum_index, n)
    gaps = [abs(asymptotic_estimate(bc, spectrum_index, n + 1) - est)]
    if n > 0:
        gaps.append(abs(est - asymptotic_estimate(bc, spectrum_index, n - 1)))
    return max(10.0, 0.5 * min(gaps))


def _locate(shooter: _Shooter, n: int, center: float, width: float) -> float:
    f0 = shooter.mismatch(center, n)
    if f0 == 0.0:
        return center
    direction = -1.0 if f0 > 0.0 else 1.0
    for _ in range(_MAX_EXPANSIONS):
        x1 = center + direction * width
        f1 = shooter.mismatch(x1, n)
        if f1 == 0.0:
            return x1
        if (f1 > 0.0) != (f0 > 0.0):
            lo, hi = (center, x1) if center < x1 else (x1, center)
            return brentq(shooter.mismatch, lo, hi, args=(n,), xtol=1e-14, maxiter=200)
        center, f0 = x1, f1
        width *= 2.0
    raise BracketFailure(
        f"no sign change of the phase condition for n={n} after {_MAX_EXPANSIONS} expansions"
    )


def _shooter(q: GridFunction, bc: BoundaryTriple, spectrum_index: int, n: int) -> _Shooter:
    if n < 0:
        raise ValueError("n must be nonnegative")
    return _Shooter(q, bc.alpha, bc.right_angle(spectrum_index), substeps(q, n))


def _eigenvalue(shooter: _Shooter, bc, spectrum_index, n, guess):
    if guess is None or not math.isfinite(guess):
        center = asymptotic_estimate(bc, spectrum_index, n, shooter.qbar)
        return _locate(shooter, n, center, _initial_width(bc, spectrum_index, n))
    f0 = shooter.mismatch(guess, n)
    # d(theta)/d(lam) is roughly 1/(2S); overshoot the Newton step a little
    width = max(3.0 * abs(f0) * shooter.scale(guess), 1e-10 * max(1.0, abs(guess)))
    return _locate(shooter, n, guess, width)


def eigenvalue(
    q: GridFunction,
    bc: BoundaryTriple,
    spectrum_index: int,
    n: int,
    guess: float | None = None,
) -> float:
    """The n-th eigenvalue (n = 0, 1, ...) for the left angle and the chosen right end.

    ``guess`` warm-starts the bracket; the asymptotic estimate is used otherwise.
    """
    shooter = _shooter(q, bc, spectrum_index, n)
    return _eigenvalue(shooter, bc, spectrum_index, n, guess)


def eigenfunction(
    q: GridFunction,
    bc: BoundaryTriple,
    spectrum_index: int,
    n: int,
    guess: float | None = None,
) -> EigenSolution:
    """Eigenvalue and normalized eigenfunction.

    Sign convention: ``g(0) > 0`` when ``g(0) != 0``, otherwise ``g'(0) > 0``.
    """
    shooter = _shooter(q, bc, spectrum_index, n)
    lam = _eigenvalue(shooter, bc, spectrum_index, n, guess)
    s, theta, logrho = shooter.trace(lam)
    if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(logrho))):
        raise IntegrationFailure("eigenfunction sweep diverged")
    m = shooter.m
    rho = np.exp(logrho - logrho.max())
    u = rho * np.sin(theta) / math.sqrt(s)
    du = rho[::m] * math.sqrt(s) * np.cos(theta[::m])
    u_nodes = u[::m]
    norm2 = integrate(GridFunction(u_nodes * u_nodes))
    fine_norm2 = _simpson(u * u)
    if not (norm2 > 0.0 and math.isfinite(norm2) and fine_norm2 > 0.0):
        raise IntegrationFailure("eigenfunction has zero or non-finite norm")
    scale = 1.0 / math.sqrt(norm2)
    g = u_nodes * scale
    return EigenSolution(
        spectrum_index=spectrum_index,
        n=n,
        lam=lam,
        g=GridFunction(g),
        dg=GridFunction(du * scale),
        g_squared=GridFunction(g * g),
        density=u * u / fine_norm2,
        refine=m,
    )


def _simpson(y: np.ndarray) -> float:
    cells = y.size - 1
    dx = 1.0 / cells
    if cells % 2:
        return float(dx * (y.sum() - 0.5 * (y[0] + y[-1])))
    return float(dx / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()))


def right_solutions(
    q: GridFunction,
    bc: BoundaryTriple,
    spectrum_index: int,
    n: int,
    lam: float | None = None,
) -> tuple[RightSolution, RightSolution]:
    """Solutions ``s`` and ``c`` at ``lam = lambda_{i,n}`` with
    ``s(1) = sin(beta), s'(1) = -cos(beta), c(1) = sin(gamma), c'(1) = -cos(gamma)``.
    """
    if lam is None:
        lam = eigenvalue(q, bc, spectrum_index, n)
    m = substeps(q, n)
    qs = q.fine_samples(2 * m)
    dx = q.h / (2 * m)
    out = []
    for kind, angle in (("s", bc.beta), ("c", bc.gamma)):
        u, du = _kernels.linear_sweep(qs, dx, lam, math.sin(angle), -math.cos(angle), m, True)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(du))):
            raise IntegrationFailure(f"backward sweep for {kind} diverged")
        out.append(RightSolution(kind, n, lam, GridFunction(u), GridFunction(du)))
    return out[0], out[1]


def pruefer_angle_at_right(
    q: GridFunction,
    lam: float,
    alpha: float,
    scale: float = 1.0,
    substeps_per_interval: int | None = None,
) -> float:
    """Prüfer angle at x = 1 for ``u(0)cos(alpha) + u'(0)sin(alpha) = 0``.

    With ``scale = 1`` this is the classic angle ``tan(theta) = u / u'``.
    """
    if substeps_per_interval is None:
        k = math.sqrt(abs(lam)) + math.sqrt(float(np.max(np.abs(q.values))) + 1.0) + 1.0
        k = max(k, scale, abs(lam) / scale)
        substeps_per_interval = max(2, math.ceil(k * q.h / _PHASE_PER_STEP))
    m = substeps_per_interval
    dev = _kernels.prufer_deviation(q.fine_samples(2 * m), q.h / (2 * m), lam, scale, _left_phase(alpha, scale))
    if not math.isfinite(dev):
        raise IntegrationFailure(f"Prüfer sweep diverged at lambda={lam!r}")
    return float(scale + dev)


def spectrum(q: GridFunction, bc: BoundaryTriple, spectrum_index: int, indices) -> np.ndarray:
    return np.array([eigenvalue(q, bc, spectrum_index, int(n)) for n in indices])
