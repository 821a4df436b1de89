"""Exception hierarchy shared across the package.

Each category maps onto a CLI exit status so batch drivers can tell a bad
configuration apart from a numerical failure.
"""


class TwoPhotonError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigurationError(TwoPhotonError, ValueError):
    """Invalid parameters, unknown config keys or bad schema versions."""

    exit_code = 2


class NumericalAccuracyError(TwoPhotonError, ArithmeticError):
    """A quadrature or propagation failed its own accuracy check."""

    exit_code = 3


class HorizonError(TwoPhotonError):
    """A kernel or trajectory had not decayed by the end of its grid."""

    exit_code = 4


class HorizonWarning(UserWarning):
    """Non-fatal counterpart of :class:`HorizonError`."""
