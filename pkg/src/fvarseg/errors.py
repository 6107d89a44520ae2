"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 2, data problems with 3 and numerical-consistency failures with 4.
Plain ``ValueError`` is used for programmer-level contract violations
(bad window indices, dimension mismatches) and surfaces as a crash.
"""


class FvarsegError(Exception):
    """Base class for package-specific errors."""


class ConfigurationError(FvarsegError):
    """Invalid or infeasible configuration (bandwidths, grids, flags)."""

    exit_code = 2


class DataError(FvarsegError):
    """Unusable input data (non-numeric cells, NaN, degenerate series)."""

    exit_code = 3


class NumericalConsistencyError(FvarsegError):
    """An internal numerical invariant failed beyond tolerance."""

    exit_code = 4
