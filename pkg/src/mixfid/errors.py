"""Exception types raised across the package.

Each concrete class carries an ``exit_code`` used by the command-line
frontend so that a failing run can be classified from its status alone.
"""


class FidelityError(Exception):
    exit_code = 10


class ValidationError(FidelityError, ValueError):
    exit_code = 11


class NotSquare(ValidationError):
    exit_code = 12


class NotHermitian(ValidationError):
    exit_code = 13


class NegativeEigenvalue(ValidationError):
    exit_code = 14


class BadTrace(ValidationError):
    exit_code = 15


class DimMismatch(FidelityError, ValueError):
    exit_code = 16


class BadExponent(FidelityError, ValueError):
    exit_code = 17


class BadDim(FidelityError, ValueError):
    exit_code = 18


class OutOfRange(FidelityError, ValueError):
    exit_code = 19


class ConvergenceFailure(FidelityError, ArithmeticError):
    exit_code = 20


class NumericalError(FidelityError, ArithmeticError):
    """A NaN or a non-negligible imaginary part appeared in a real quantity."""

    exit_code = 21


class ZeroDenominator(FidelityError, ZeroDivisionError):
    exit_code = 22


class OutOfRangeMeasure(FidelityError, ValueError):
    exit_code = 23


class InvalidAlphabet(FidelityError, ValueError):
    exit_code = 24


class InvalidProcess(FidelityError, ValueError):
    exit_code = 25


class UnsupportedState(FidelityError, ValueError):
    exit_code = 26


class NegativeDistribution(FidelityError, ValueError):
    exit_code = 27


class UnknownPurity(FidelityError, ValueError):
    exit_code = 28


class ParseError(FidelityError, ValueError):
    exit_code = 29
