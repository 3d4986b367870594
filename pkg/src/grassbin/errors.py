"""Exception hierarchy for grassbin.

Every error raised by the library derives from :class:`GrassbinError`, so
callers can catch the whole family with one clause. Errors that carry a
useful payload (a witness index set, an offending state, an iteration
count) expose it as an attribute.
"""


class GrassbinError(Exception):
    """Base class for all grassbin errors."""


class DimensionMismatchError(GrassbinError):
    """Operand dimensions are inconsistent (non-square matrix, wrong vector length)."""


class DimensionTooLargeError(GrassbinError):
    """An exhaustive 2^p enumeration was requested above the configured cap."""


class IndexOutOfRangeError(GrassbinError):
    """A variable index lies outside 1..p or is duplicated."""


class EmptyIndexSetError(GrassbinError):
    """An operation requiring a nonempty index set received an empty one."""


class SameIndexError(GrassbinError):
    """Two distinct variable indices were required but the same one was given."""


class ObservedIndexError(GrassbinError):
    """A query variable is already fixed by the observation."""


class SingularMatrixError(GrassbinError):
    """Matrix inversion hit a pivot below the singularity tolerance."""


class SingularSigmaError(SingularMatrixError):
    """The parameter matrix (or a transformed version of it) is singular."""


class SingularBlockError(SingularMatrixError):
    """The block eliminated by a Schur complement is singular."""


class MeanOutOfRangeError(GrassbinError):
    """A diagonal entry (a marginal mean) lies outside the open interval (0, 1)."""

    def __init__(self, index, value):
        self.index = index
        self.value = value
        super().__init__(f"mean parameter at index {index} is {value!r}, not in (0, 1)")


class InvalidModelError(GrassbinError):
    """Strict validation failed: some joint probability is negative."""

    def __init__(self, witness=None, message=None):
        self.witness = witness
        if message is None:
            message = f"model is invalid (witness principal minor {witness})"
        super().__init__(message)


class ZeroEvidenceError(GrassbinError):
    """The probability of the conditioning event vanishes within tolerance."""


class InvalidConditionalMeanError(GrassbinError):
    """A chain-rule conditional mean left [0, 1]; the model is invalid."""

    def __init__(self, step, value=None):
        self.step = step
        self.value = value
        super().__init__(f"conditional mean for variable {step} is outside [0, 1]"
                         + (f" (value {value!r})" if value is not None else ""))


class TooFewSamplesError(GrassbinError):
    """The dataset has too few rows for the requested statistic."""


class InfeasibleTargetError(GrassbinError):
    """No valid parameterization matching the requested moments was found."""


class NonConvergenceError(GrassbinError):
    """An iterative fit exhausted its budget before meeting its tolerance."""

    def __init__(self, iterations, message=None, report=None):
        self.iterations = iterations
        self.report = report
        super().__init__(message or f"did not converge after {iterations} iterations")


class NonPositiveProbabilityError(GrassbinError):
    """An objective evaluation encountered a state with probability <= 0."""

    def __init__(self, state, value=None):
        self.state = state
        self.value = value
        super().__init__(f"model probability of state {state} is not positive"
                         + (f" ({value!r})" if value is not None else ""))
