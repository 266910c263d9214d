"""Exception hierarchy shared by all plaplab modules.

Plain ``ValueError`` is used for ordinary domain violations (p out of range
and the like); the classes below carry semantics the CLI maps to exit codes:
ConfigError -> 2, NumericalError -> 1.
"""


class PlaplabError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(PlaplabError):
    """Invalid configuration: bad grid size, unknown key, malformed flag."""


class NumericalError(PlaplabError):
    """Numerical breakdown: non-finite energy, failed line search."""


class ResolutionError(PlaplabError):
    """A requested radius or stencil does not fit on the grid."""

    def __init__(self, message, max_levels=None):
        super().__init__(message)
        self.max_levels = max_levels


class NodeLookupError(PlaplabError):
    """A point handed to a nodal query is not a grid node."""


class DegenerateInputError(PlaplabError):
    """A transform received an input it cannot normalize (zero norm, zero gradient)."""


class OutOfDomainError(PlaplabError):
    """A rescaling would need samples outside the computational domain."""


class DegenerateProfileError(PlaplabError):
    """An oscillation profile is flat to machine precision; no exponent exists."""
