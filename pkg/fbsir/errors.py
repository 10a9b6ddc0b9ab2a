"""
Exceptions raised by fbsir.

Config problems map to exit code 1 of the scripts, solver failures to 2 and
sweep bracket problems to 3.
"""


class ConfigError(ValueError):
    """
    Invalid scenario configuration. The message starts with the flat key of the
    offending field (e.g. ``model.mu1``).
    """

    pass


class SolverError(RuntimeError):
    """
    Failure while advancing a simulation.

    Args:
        message (str): description of the failure
        t (float): simulation time at which the failure happened
    """

    def __init__(self, message, t=None):
        self.t = t
        if t is not None:
            message = f"{message} (t={t:.10g})"
        super(SolverError, self).__init__(message)


class PositivityError(SolverError):
    """A field dropped below the negative tolerance, dt is too large."""

    pass


class NonFiniteError(SolverError):
    """A NaN or inf appeared in one of the fields."""

    pass


class StepSizeError(SolverError):
    """The ODE integrator produced a negative compartment, dt is too large."""

    pass


class FrontEscapeError(SolverError):
    """
    The free boundary reached the end of the truncated susceptible domain.

    Args:
        message (str): description
        t (float): time of the escape
        h (float): front position when the escape was detected
    """

    def __init__(self, message, t=None, h=None):
        self.h = h
        super(FrontEscapeError, self).__init__(message, t=t)


class NoCriticalRadiusError(ValueError):
    """The critical radius only exists when R0 > 1."""

    pass


class BracketError(ValueError):
    """Both ends of a sweep bracket have the same classification."""

    pass


class InconclusiveBracketError(BracketError):
    """A bracket point could not be classified, a longer t_end may help."""

    pass
