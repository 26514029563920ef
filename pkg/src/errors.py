class CoresetError(Exception):
    """Base class for every error raised by the kz-coreset library."""


class DimensionMismatchError(CoresetError):
    pass


class InvalidParameterError(CoresetError):
    pass


class PointSetFormatError(CoresetError):
    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class InfeasibleParametersError(CoresetError):
    pass


class RetryBudgetExceeded(CoresetError):
    pass


class CombinatorialGuardError(CoresetError):
    pass


class ConfigError(CoresetError):
    pass
