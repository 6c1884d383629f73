class RHFError(Exception):
    pass


class DegenerateMetricError(RHFError, ValueError):
    """Metric is singular, indefinite, or too badly conditioned to invert."""

    def __init__(self, message, location=None):
        if location is not None:
            message = f"{message} at grid index {tuple(int(i) for i in location)}"
        super().__init__(message)
        self.location = location


class CorruptedFieldError(RHFError, ValueError):
    pass


class StepRejected(RHFError):
    """Raised by a time step that lost positive-definiteness or finiteness."""


class ConfigError(RHFError, ValueError):
    def __init__(self, field, message):
        super().__init__(f"config field '{field}': {message}")
        self.field = field
