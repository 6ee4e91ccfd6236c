"""Exception hierarchy shared by every module of the toolkit."""


class DissipatorError(Exception):
    """Base class for all toolkit errors."""


class InvalidInput(DissipatorError, ValueError):
    """Malformed input: wrong shapes, non-finite entries, bad parameters."""


class NotPositiveDefinite(DissipatorError):
    """A matrix required to be symmetric positive definite is not."""


class SingularSystem(DissipatorError):
    """A linear system is singular to working precision."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class RankDeficient(InvalidInput):
    """The control matrix does not have full column rank."""


class NotDissipatable(DissipatorError):
    """No feedback can make the pair dissipative (or none was found)."""


class PreconditionViolated(DissipatorError):
    """A diagnostic was called on an input that violates its hypotheses."""


class AlphaConditionViolated(DissipatorError):
    """The H2 parameter of the block parametrization is too large."""

    def __init__(self, alpha, lambda_plus_min, lambda_minus_max):
        super().__init__(
            f"alpha={alpha:.6g} violates lambda+_min={lambda_plus_min:.6g} "
            f"> alpha*|lambda-_max|={alpha * lambda_minus_max:.6g}"
        )
        self.alpha = alpha
        self.lambda_plus_min = lambda_plus_min
        self.lambda_minus_max = lambda_minus_max


class AlreadyDissipative(DissipatorError):
    """W(A) already lies in the closed left half plane; nothing to shrink."""


class StagnatedStep(DissipatorError):
    """The inner step size collapsed without achieving descent."""


class NoFlatSegment(DissipatorError):
    """The zero eigenvalue of Sym(A - BK) is simple, so no flat boundary portion."""


class NoPositivePart(DissipatorError):
    """The generated test matrix has no positive eigenvalue in its symmetric part."""


class GenerationFailed(DissipatorError):
    """Random instance generation ran out of retries."""
