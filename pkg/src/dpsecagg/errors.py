"""Exception hierarchy shared by every layer of the package."""


class SecAggError(Exception):
    """Base class for all errors raised by dpsecagg."""


# --- algebra / codes -------------------------------------------------------

class ModulusMismatch(SecAggError, ValueError):
    pass


class NotPrime(SecAggError, ValueError):
    pass


class ZeroInverse(SecAggError, ZeroDivisionError):
    pass


class DuplicateAbscissa(SecAggError, ValueError):
    pass


class DuplicatePoints(SecAggError, ValueError):
    pass


class DimensionMismatch(SecAggError, ValueError):
    pass


class SingularSubmatrix(SecAggError, ValueError):
    pass


class InsufficientShares(SecAggError, ValueError):
    pass


# --- model ---------------------------------------------------------------

class ParameterError(SecAggError, ValueError):
    pass


class DemandError(SecAggError, ValueError):
    pass


class RankDeficient(DemandError):
    pass


class ZeroColumn(DemandError):
    pass


class ZeroEntryForSingleScheme(DemandError):
    pass


class ScheduleError(SecAggError, ValueError):
    pass


class IncompleteTranscript(SecAggError, ValueError):
    pass


# --- schemes -------------------------------------------------------------

class ZeroCoefficient(SecAggError, ValueError):
    pass


class QueryReuse(SecAggError, RuntimeError):
    """A single-use query secret was offered to a second protocol run."""


class MaskReuse(SecAggError, RuntimeError):
    """A shared mask symbol was requested by two different retrievals."""


class UserNotInSurvivors(SecAggError, ValueError):
    pass


class InsufficientAnswers(SecAggError, ValueError):
    pass


class MissingBlock(SecAggError, ValueError):
    pass


class RewriteExhausted(SecAggError, RuntimeError):
    pass


# --- harness / verify ----------------------------------------------------

class ProtocolFailure(SecAggError, RuntimeError):
    """A run failed; ``stage`` names where and ``transcript`` holds what was recorded."""

    def __init__(self, stage, message, transcript=None):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.transcript = transcript


class ConverseViolation(SecAggError, AssertionError):
    pass


class NonlinearityDetected(SecAggError, RuntimeError):
    pass


class EnumerationTooLarge(SecAggError, ValueError):
    pass


class InsufficientSamples(SecAggError, ValueError):
    pass
