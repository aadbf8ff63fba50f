"""Reconstruction of Sturm-Liouville potentials from two spectra."""

from .forward import DEFAULT_BC, BoundaryTriple, eigenfunction, eigenvalue
from .functional import SpectralIndex, TargetSpectra, WeightScheme, evaluate, synthesize
from .grid import GridFunction, sample
from .optimizer import OptimizerConfig, minimize

__all__ = [
    "DEFAULT_BC",
    "BoundaryTriple",
    "GridFunction",
    "OptimizerConfig",
    "SpectralIndex",
    "TargetSpectra",
    "WeightScheme",
    "eigenfunction",
    "eigenvalue",
    "evaluate",
    "minimize",
    "sample",
    "synthesize",
]

__version__ = "0.1.0"
