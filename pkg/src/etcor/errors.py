"""Exception types shared across the package."""


class EtcorError(Exception):
    """Base class for all package errors."""


class DimensionError(EtcorError, ValueError):
    pass


class DomainError(EtcorError, ValueError):
    """An argument lies outside the set where the operation is defined."""


class SingularityError(EtcorError):
    pass


class ConvergenceError(EtcorError):
    pass


class SynthesisError(EtcorError):
    pass


class CertificateError(EtcorError):
    pass


class ConfigError(EtcorError, ValueError):
    pass


class NumericError(EtcorError):
    """NaN or Inf appeared in the simulation state."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class DivergenceError(EtcorError):
    """The divergence guard tripped during a simulation run.

    ``t`` is the simulation time of the first offending step and ``agent``
    the 1-based index of the agent whose state was largest (``None`` if the
    exosystem or a controller variable tripped it).
    """

    def __init__(self, message, t, agent=None, trace=None):
        super().__init__(message)
        self.t = t
        self.agent = agent
        self.trace = trace
