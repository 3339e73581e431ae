"""Exception and warning types raised by paramchar."""


class ParamcharError(Exception):
    """Base class for all paramchar errors."""


class InvalidArgumentError(ParamcharError, ValueError):
    pass


class IllConditionedError(ParamcharError, ArithmeticError):
    pass


class FitFailureError(ParamcharError, RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class RankDeficiencyError(ParamcharError, ArithmeticError):
    pass


class IncompleteCalibrationError(ParamcharError):
    def __init__(self, message, missing_columns=()):
        super().__init__(message)
        self.missing_columns = tuple(missing_columns)


class DegenerateRowError(ParamcharError, ArithmeticError):
    pass


class ConfigError(ParamcharError, ValueError):
    """Raised for configuration files that do not validate."""


class IllConditionedWarning(RuntimeWarning):
    pass


class NoisyDataWarning(RuntimeWarning):
    pass

