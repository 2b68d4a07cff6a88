"""Error taxonomy shared across the package."""


class SMCSError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SMCSError):
    """Invalid configuration, shapes, parameters, or input files."""


class ParticleDeathError(SMCSError):
    """All particle weights are zero (every log-weight is -inf).

    Carries the partial trace of the aborted run when raised by the
    engine, so the failure point can be inspected.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []


class NumericalError(SMCSError):
    """Non-finite quantity where a finite one is required.

    last_iterate holds the most recent state of an iterative procedure
    (Newton, leapfrog) when available.
    """

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate
