"""Exception hierarchy.

``exit_code`` is what the command line returns when the error escapes a
subcommand: 1 for bad user input, 2 for numerical failure.
"""

from __future__ import annotations


class QRLSError(Exception):
    exit_code = 2


class UserError(QRLSError, ValueError):
    exit_code = 1


class DimensionError(UserError):
    """Parameter arrays do not match the declared model orders."""


class ConstraintError(UserError):
    """A parameter vector violates the parameter-space constraints."""


class NonstationaryScaleError(ConstraintError):
    """Sum of GARCH coefficients is not below one."""


class UnsupportedOrdersError(UserError):
    pass


class DomainError(UserError):
    """Argument outside its mathematical domain, e.g. a level not in (0, 1)."""


class InputError(UserError):
    """Malformed data, such as NaN observations or unreadable CSV."""


class DegenerateDensityError(QRLSError):
    pass


class ExplosivePathError(QRLSError):
    def __init__(self, t: int):
        super().__init__(f"simulated h_t^2 exceeded 1e30 at t={t}")
        self.t = t


class SingularHessianError(QRLSError):
    pass


class OptimizationInitError(QRLSError):
    """Every vertex of the starting simplex evaluated to +inf."""
