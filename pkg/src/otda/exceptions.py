#
# Exception classes
#


class OTDAError(Exception):
    """Base class for all errors raised by otda."""


class DimensionError(OTDAError, ValueError):
    """Arrays with incompatible shapes were combined."""


class ValidationError(OTDAError, ValueError):
    """A value violates the contract of the operation it was passed to."""


class SolverError(OTDAError, RuntimeError):
    """A transport solver failed to produce a finite plan.

    Parameters
    ----------
    message : str
        Description of the failure.
    draw : int, optional
        Index of the minibatch draw that failed, when raised from a minibatch
        estimator.
    """

    def __init__(self, message, draw=None):
        if draw is not None:
            message = f"draw {draw}: {message}"
        super().__init__(message)
        self.draw = draw


class ConfigError(OTDAError, ValueError):
    """Invalid experiment configuration.

    Parameters
    ----------
    path : str
        Dotted path of the offending field, e.g. ``"solver.tau"``.
    message : str
        What is wrong with it.
    """

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


class CheckFailure(OTDAError):
    """A verification suite did not meet its tolerances."""
