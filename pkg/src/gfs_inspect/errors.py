"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """Invalid scenario, controller or GA configuration."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class InvalidQuaternionError(ValueError):
    pass


class InvalidInertiaError(ValueError):
    pass


class GeometryViolationError(ValueError):
    """Deputy inside the inspection sphere, where the FOV test is undefined."""


class PropagationDivergedError(RuntimeError):
    pass
