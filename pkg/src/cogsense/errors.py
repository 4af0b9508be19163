"""Exception hierarchy shared by the library and the CLI.

The CLI maps these onto exit codes: validation/domain problems exit 2,
numeric/regime/estimation problems exit 3, I/O problems exit 4.
"""


class CogsenseError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(CogsenseError):
    """Invalid configuration, argument combination, or file schema."""


class DomainError(ValidationError):
    """Argument outside a function's mathematical domain."""


class RegimeError(CogsenseError):
    """Asymptotic closed form evaluated outside its validity regime."""


class NumericError(CogsenseError):
    """Iteration or quadrature failed to converge to the requested accuracy."""


class NoSolutionError(NumericError):
    """Root bracket contains no sign change."""


class EstimationError(CogsenseError):
    """Monte Carlo post-processing has too little data; raise trials."""
