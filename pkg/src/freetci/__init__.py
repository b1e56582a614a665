"""Equilibrium measures, log-gas ensembles and transportation cost
inequalities for one and several non-commutative variables.

The package is organized around a single pipeline: potentials define
weighted logarithmic-energy problems (``potentials``, ``equilibrium``),
random-matrix ensembles realize them at finite N (``random_matrices``,
``pressure``), transport distances compare their spectral measures
(``measures``, ``transport``, ``free_moments``), and the ``tci`` module
assembles both sides of each transportation inequality into verdict
reports.  The ``freetci`` console script exposes the whole chain.
"""

from .errors import (ConfigError, ConvergenceError, DiagnosticError,
                     EnlargeWindowError, FreetciError, SingularMeasureWarning)
from .measures import GridMeasure, EmpiricalMeasure
from .potentials import Potential, line_potential, circle_potential
from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ConvergenceError", "DiagnosticError",
    "EnlargeWindowError", "FreetciError", "SingularMeasureWarning",
    "GridMeasure", "EmpiricalMeasure",
    "Potential", "line_potential", "circle_potential",
    "KERNEL_BACKEND", "__version__",
]
