"""Exception hierarchy shared by all analysis stages.

Every error carries the process exit code the command line reports for it:
3 for bad or insufficient data, 4 for numerical failures.
"""


class ClockworkError(Exception):
    """Base class for all analysis errors."""

    exit_code: int = 1


class DataError(ClockworkError):
    """Input data violates a precondition."""

    exit_code = 3


class NumericalError(ClockworkError):
    """A numerical procedure failed or produced an unusable result."""

    exit_code = 4


# ============== Generators ==============

class NegativeRate(DataError):
    """An off-diagonal rate is negative or not finite."""


class AbsorbingState(DataError):
    """A state has no outgoing rate."""


class Reducible(DataError):
    """The generator has more than one communicating class."""


class DegenerateGenerator(DataError):
    """A visited state cannot be left."""


# ============== Signals ==============

class EmptyTrace(DataError):
    """A trace or sequence holds no samples."""


class ConstantSignal(DataError):
    """All samples share one value."""


class LengthMismatch(DataError):
    """Two aligned series differ in length or sample interval."""


class UnitMismatch(DataError):
    """A trace carries the wrong channel for the requested quantity."""


class MalformedRow(DataError):
    """A CSV row cannot be parsed."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class NonUniformSampling(DataError):
    """Time column spacing deviates from the median step."""


class FitDiverged(NumericalError):
    """The level-model fit failed or left a large residual."""


class PeaksUnresolved(DataError):
    """The fitted levels overlap so states cannot be told apart."""


class AllZeroDensity(NumericalError):
    """Every mixture component density vanished."""


# ============== Estimation ==============

class TooShort(DataError):
    """A series is too short for the requested slicing."""


class TooFewSamples(DataError):
    """Not enough waiting times for the estimator."""


class ZeroDenominator(NumericalError):
    """Deadtime-corrected dwell sum is zero."""


class ZeroRate(DataError):
    """A rate that normalizes an estimator is zero."""


class UnvisitedState(DataError):
    """A state was not left often enough to estimate its rates."""


class WindowTooShort(DataError):
    """The drift window exceeds the trace duration."""


class ConvergenceFailure(NumericalError):
    """The Perron eigenvalue could not be determined."""


# ============== Thermodynamics ==============

class NegativeDissipation(DataError):
    """Output power exceeds input power."""


# ============== Pipeline ==============

class StageError(ClockworkError):
    """An error raised inside a pipeline stage, tagged with the stage name."""

    def __init__(self, stage: str, cause: ClockworkError):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = cause.exit_code
