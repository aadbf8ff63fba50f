"""Named test potentials and a non-asymptotic stress spectrum.

These are convenient stand-ins for experiments. They are not meant to
reproduce any particular published example.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .forward import DEFAULT_BC, BoundaryTriple
from .functional import SpectralIndex, TargetSpectra
from .grid import GridFunction, sample

__all__ = ["NAMED", "names", "resolve", "STRESS_VALUES", "stress_spectra"]


def _step(x):
    return np.where(x < 0.5, 1.0, -1.0)


NAMED: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "zero": lambda x: np.zeros_like(x),
    "constant": lambda x: np.full_like(x, 5.0),
    "bump": lambda x: 4.0 * np.exp(-50.0 * (x - 0.4) ** 2),
    "cos": lambda x: np.cos(2.0 * math.pi * x),
    "cos+3": lambda x: np.cos(2.0 * math.pi * x) + 3.0,
    "step": _step,
}


def names() -> list[str]:
    return sorted(NAMED)


def resolve(spec: str, n_intervals: int = 512) -> GridFunction:
    """A named potential sampled on the grid, or ``@path`` to a saved grid function.

    A file keeps its own grid; ``n_intervals`` only applies to names.
    """
    if spec.startswith("@"):
        return GridFunction.from_json(spec[1:])
    try:
        func = NAMED[spec]
    except KeyError:
        raise ValueError(f"unknown potential {spec!r}; choose from {', '.join(names())} or @file.json") from None
    return sample(func, n_intervals)


# ten eigenvalue-like numbers far from any potential's asymptotics
STRESS_VALUES = (
    9.99742, 11.6265, 14.4527, 23.9247, 26.2413,
    31.091, 40.6658, 48.1088, 53.5093, 60.9088,
)


def stress_spectra(values=STRESS_VALUES, bc: BoundaryTriple = DEFAULT_BC) -> TargetSpectra:
    """Assign sorted values alternately to spectrum 2 and spectrum 1.

    The order ``lambda_{2,0} < lambda_{1,0} < lambda_{2,1} < ...`` is the
    interlacing of the default boundary angles.
    """
    vals = sorted(float(v) for v in values)
    entries = {}
    for k, lam in enumerate(vals):
        entries[SpectralIndex(2 if k % 2 == 0 else 1, k // 2)] = lam
    prov = {"source": "stress sequence", "assignment": "sorted, alternating spectrum 2 then 1"}
    return TargetSpectra(entries, bc, prov)
