"""Exception types shared across the package."""


class PolarOBBError(Exception):
    """Base class for all package errors."""


class DegenerateInput(PolarOBBError, ValueError):
    """Geometry with zero area, coincident points or collinear point sets."""


class NumericalGuard(PolarOBBError, ArithmeticError):
    """A denominator fell below the guard threshold."""


class DimMismatch(PolarOBBError, ValueError):
    pass


class EmptyMask(PolarOBBError, ValueError):
    pass


class BadSweep(PolarOBBError, ValueError):
    pass


class GTEmpty(PolarOBBError, ValueError):
    pass


class ParseError(PolarOBBError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)
