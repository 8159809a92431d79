"""Exception hierarchy.

Split along the CLI exit-code boundaries: bad arguments or configs,
unusable data, and numerical failure during estimation or simulation.
"""


class MycelinkError(Exception):
    """Base class for all package errors."""


class InvalidSpecError(MycelinkError, ValueError):
    """A spec, config, or argument value is out of range or inconsistent."""


class RecordingParseError(MycelinkError, ValueError):
    """A recording file could not be parsed into a usable pair."""


class DegenerateDataError(MycelinkError, ValueError):
    """Data is structurally valid but unusable (zero variance, too short, empty spectrum)."""


class SingularRegressionError(MycelinkError, ArithmeticError):
    """A least-squares design matrix is rank deficient past repair."""


class DivergenceError(MycelinkError, ArithmeticError):
    """An iterative estimate or recursive simulation blew up.

    ``step`` holds the index at which the magnitude check tripped,
    or -1 when the failure is not tied to a single step.
    """

    def __init__(self, message: str, step: int = -1):
        super().__init__(message)
        self.step = step


class NoViableModelError(MycelinkError, ArithmeticError):
    """Every candidate configuration in a search failed or diverged."""
