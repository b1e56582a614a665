"""Exception hierarchy.

Two families matter to callers: configuration problems (bad inputs, malformed
files) and numerical diagnostics (non-convergence, acceptance-rate trouble,
windows too small). The CLI maps them to exit codes 2 and 3 respectively.
"""


class FreetciError(Exception):
    """Base class for package errors."""


class ConfigError(FreetciError):
    """Invalid configuration, arguments or input files."""


class DiagnosticError(FreetciError):
    """A numerical diagnostic failed hard enough to distrust the output."""


class ConvergenceError(DiagnosticError):
    """An iterative solver hit its cap; carries the last residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class EnlargeWindowError(DiagnosticError):
    """Equilibrium mass piled up at the window edge: R is below the support radius."""


class SingularMeasureWarning(UserWarning):
    """A grid measure concentrates enough mass at one node that the
    grid-regularized logarithmic energy is unreliable."""
