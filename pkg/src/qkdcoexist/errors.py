class DomainError(ValueError):
    """A numeric argument lies outside the domain of an operation."""


class ConfigError(ValueError):
    """Invalid scenario or parameter file. The message carries the field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
