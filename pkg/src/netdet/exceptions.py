"""Exception hierarchy shared by every netdet module."""


class NetDetError(Exception):
    """Base class for all errors raised by netdet."""


class ValidationError(NetDetError, ValueError):
    """Invalid input data, parameters or configuration."""


class ConvergenceError(NetDetError, RuntimeError):
    """An iterative solver stopped before reaching its tolerance.

    Attributes
    ----------
    residual : float
        Best residual norm reached before giving up.
    """

    def __init__(self, message, residual=float("nan")):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual
