"""Exception types shared across the package.

The CLI maps these onto exit codes: ValidationError -> 1,
SolverError -> 2, VerificationError -> 3.
"""


class BilayerCtrlError(Exception):
    """Base class for all package errors."""


class ValidationError(BilayerCtrlError):
    """Invalid physical parameters, state, config, or system definition."""


class SolverError(BilayerCtrlError):
    """An iterative solve or time integration failed (non-convergence, CFL, blow-up)."""


class VerificationError(BilayerCtrlError):
    """An invariant or certification check did not hold."""
