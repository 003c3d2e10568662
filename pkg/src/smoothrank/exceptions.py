"""Exception types raised by smoothrank."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested accuracy."""


class ConfigurationError(ValueError):
    """An invalid combination of kernel, bandwidth or experiment settings.

    ``violations`` lists every problem found when a whole configuration is
    validated at once.
    """

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations) if violations else [str(message)]


class DegenerateSampleError(ValueError):
    """The sample does not support the requested statistic (e.g. zero variance)."""
