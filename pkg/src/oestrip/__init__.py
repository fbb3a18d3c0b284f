"""Impedance-strip diffraction: OE-equation solver for matrix Riemann-Hilbert problems and a BIE reference."""

from .bie import Panelization, bie_directivity, bie_table, solve_antisym, solve_sym
from .contours import BranchedSqrtTracker, GammaMesh, MeshGrading, ProblemParams, build_gamma, kprime
from .directivity import DirectivityTable, OEPipeline, compare, theta_grid
from .errors import ConfigError, NumericalFailure, OEStripError
from .kernel import Case, MatrixKind
from .oe_solver import CoefficientTable, march, oe_residual

__all__ = [
    "BranchedSqrtTracker", "Case", "CoefficientTable", "ConfigError", "DirectivityTable",
    "GammaMesh", "MatrixKind", "MeshGrading", "NumericalFailure", "OEPipeline", "OEStripError",
    "Panelization", "ProblemParams", "bie_directivity", "bie_table", "build_gamma", "compare",
    "kprime", "march", "oe_residual", "solve_antisym", "solve_sym", "theta_grid",
]
