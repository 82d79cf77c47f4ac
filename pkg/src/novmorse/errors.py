"""Exception hierarchy shared by all subpackages."""


class NovMorseError(Exception):
    """Base class for every error raised by this package."""


# Novikov algebra
class ZeroInversion(NovMorseError, ZeroDivisionError):
    pass


class InsufficientPrecision(NovMorseError):
    """A truncated value cannot decide the requested result."""


class NonSquare(NovMorseError, ValueError):
    pass


class SingularMatrix(NovMorseError):
    pass


# Morse engine
class DegenerateCritical(NovMorseError):
    pass


class IncompleteSearch(NovMorseError):
    pass


class StepUnderflow(NovMorseError):
    pass


class ResolutionExceeded(NovMorseError):
    pass


class DifferentialSquareNonzero(NovMorseError):
    pass


class SignUnavailable(NovMorseError):
    """Signed counts were requested on a model without orientation data."""


# homology oracle
class UnsupportedModel(NovMorseError, ValueError):
    pass


class BoundarySquareNonzero(NovMorseError):
    pass


# chain algebra / coherence
class ShapeMismatch(NovMorseError, ValueError):
    pass


class UngradedSource(NovMorseError, ValueError):
    pass


class UnknownIdentifier(NovMorseError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else ""


class CountSystemError(NovMorseError, ValueError):
    """A count-system document violates its schema or index constraints."""


class HypothesisFailure(NovMorseError):
    """A precondition of the Arnold-bound deduction does not hold.

    ``stage`` names the pipeline stage (or precondition) that failed and
    ``verdict`` optionally carries the partial pipeline record.
    """

    def __init__(self, stage: str, message: str = "", verdict=None):
        self.stage = stage
        self.message = message or stage
        self.verdict = verdict
        super().__init__(f"{stage}: {self.message}" if message else stage)
