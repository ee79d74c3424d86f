"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ``ConfigError`` -> 1,
``NumericalError`` and subclasses -> 2, ``InstabilityError`` -> 3.
"""


class QmromError(Exception):
    """Base class for all package errors."""


class ConfigError(QmromError, ValueError):
    """Invalid or incomplete run configuration."""


class FormatError(QmromError, ValueError):
    """Malformed or inconsistent file contents."""


class NumericalError(QmromError, RuntimeError):
    """A numerical routine could not produce a trustworthy result."""


class IllConditionedError(NumericalError):
    """Normal equations too ill-conditioned to solve without regularization."""


class SolverError(NumericalError):
    """An iterative solver diverged."""


class IntegrationError(NumericalError):
    """Time integration could not be set up or advanced."""


class InstabilityError(QmromError, RuntimeError):
    """Every evaluated reduced model blew up."""
