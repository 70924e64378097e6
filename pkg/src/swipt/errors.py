"""Exception types shared across the solver and CLI layers."""


class SwiptError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SwiptError):
    """Invalid configuration input (bad value, unparseable file)."""


class InfeasibleTargetError(SwiptError):
    """The requested energy target exceeds what any policy can harvest.

    Carries the instance's maximum achievable value in ``q_max`` so callers
    can clamp or report a usable range.
    """

    def __init__(self, message, q_max):
        super().__init__(message)
        self.q_max = float(q_max)


class ConvergenceError(SwiptError):
    """A dual solver ran out of iterations before closing the duality gap."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class DegenerateCaseError(SwiptError):
    """A closed-form threshold does not exist for the given dual point."""
