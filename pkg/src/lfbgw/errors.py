"""Exception hierarchy shared by all lfbgw modules."""


class LFError(Exception):
    """Base class for every error raised by lfbgw."""


class InvalidArgumentError(LFError, ValueError):
    """Malformed input: wrong dimension, negative mass, bad index."""


class ConditioningError(LFError, ValueError):
    """Conditioning on an event of probability zero."""


class PreconditionError(LFError):
    """A numeric precondition does not hold (e.g. reducible or periodic M).

    ``diagnostics`` carries whatever the failing check computed.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class DomainError(LFError, ValueError):
    """The requested quantity is undefined for this regime."""


class SeriesDivergenceError(LFError, ArithmeticError):
    """A series expected to converge could not be certified."""


class DecodeError(LFError, ValueError):
    """A contour path is not a valid excursion."""


class ModelParseError(LFError, ValueError):
    """Model file failed to parse or validate.

    Parameters
    ----------
    message : str
        Human readable description.
    line : int, optional
        1-based line number of the offending line.
    column : int, optional
        1-based column, when known.
    """

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        loc = ""
        if line is not None:
            loc = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(loc + message)
