# Exception hierarchy shared by every module


class LevyError(Exception):
    """Base class for all toolkit errors"""


class SpecParseError(LevyError):
    """Process spec or run config could not be read"""


class ModelValidationError(LevyError):

    """Model failed validation; the report lists every check"""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class QuadratureError(LevyError):

    """Quadrature did not converge on the given interval"""

    def __init__(self, message, interval=None, diagnostics=None):
        super().__init__(message)
        self.interval = interval
        self.diagnostics = diagnostics or {}


class QuantileUndefinedError(LevyError):
    """Tail is finite at 0, so the tail quantile is undefined"""


class BisectionError(LevyError):
    """Bisection could not bracket the requested level"""


class PreconditionError(LevyError):
    """Operation called outside the hypotheses it is defined under"""


class DegenerateBandError(LevyError):
    """Small-jump band has zero variance and there is no Gaussian part"""


class SimulationBudgetError(LevyError):
    """Expected jump count is too large for the chosen truncation"""


class ReportWriteError(LevyError):
    """An output artifact could not be written"""
