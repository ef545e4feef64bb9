"""Exception hierarchy shared by all modules.

Every error carries a stable machine-readable ``code`` so the CLI can emit
it without string-matching exception text.
"""


class OrbitError(Exception):
    code = "OrbitError"


class DimensionMismatch(OrbitError):
    code = "DimensionMismatch"


class NotOnVariety(OrbitError):
    code = "NotOnVariety"


class NonPositiveResult(OrbitError):
    code = "NonPositiveResult"


class NoRealSolution(OrbitError):
    code = "NoRealSolution"


class LetterOutOfRange(OrbitError):
    code = "LetterOutOfRange"


class ErrorBudgetExceeded(OrbitError):
    code = "ErrorBudgetExceeded"


class NotOutgoing(OrbitError):
    code = "NotOutgoing"


class DepthCapHit(OrbitError):
    code = "DepthCapHit"


class DigestMismatch(OrbitError):
    code = "DigestMismatch"


class CorruptCheckpoint(OrbitError):
    code = "CorruptCheckpoint"


class NonTermination(OrbitError):
    code = "NonTermination"


class EmptyBall(OrbitError):
    code = "EmptyBall"


class InsufficientSamples(OrbitError):
    code = "InsufficientSamples"


class DegenerateRange(OrbitError):
    code = "DegenerateRange"


class NonPositiveLength(OrbitError):
    code = "NonPositiveLength"


class NonPositiveCoordinate(OrbitError):
    code = "NonPositiveCoordinate"


class InvalidSeries(OrbitError):
    code = "InvalidSeries"


class PartialTraversal(OrbitError):
    """A visitor callback failed; the traversal was aborted mid-flight."""

    code = "PartialTraversal"

    def __init__(self, message, partial=None, cause=None):
        super().__init__(message)
        self.partial = partial
        self.cause = cause
