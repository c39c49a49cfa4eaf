"""Exception types raised by the library."""


class EllipseError(Exception):
    """Base class for all errors raised by confocal_ellipse."""


class NotAnEllipse(EllipseError):
    pass


class InvalidAxes(EllipseError):
    pass


class UndefinedAtCriticalPoint(EllipseError):
    """The algebraic gradient vanishes, so the Sampson distance is undefined."""


class DegenerateInput(EllipseError):
    pass


class InitializationFailed(EllipseError):
    pass


class NumericalFailure(EllipseError):
    pass


class EmptyResult(EllipseError):
    pass


class EmptyInput(EllipseError):
    pass


class InsufficientPoints(DegenerateInput):
    pass


class ParseError(EllipseError):
    """A line of an input file could not be parsed.

    The 1-based offending line number is kept in ``lineno``.
    """

    def __init__(self, message, lineno):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno
