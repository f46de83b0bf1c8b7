"""Exception hierarchy shared by all solver stages."""


class EqcqpError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(EqcqpError):
    pass


class NonFinite(EqcqpError):
    pass


class ConvergenceFailure(EqcqpError):
    pass


class NotPositiveDefinite(EqcqpError):
    pass


class NotPsd(EqcqpError):
    pass


class FullRank(EqcqpError):
    """Raised when the rank-deficient path receives a full-rank constraint matrix."""


class RankDeficientRows(EqcqpError):
    pass


class SingularConstraintMatrix(EqcqpError):
    pass


class ConstraintNotIndefinite(EqcqpError):
    """The indefinite path requires eigenvalues of both signs in the whitened constraint."""


class InfeasibleConstraint(EqcqpError):
    pass


class PoleEvaluation(EqcqpError):
    """Secular function evaluated on top of an active pole."""


class BracketFailure(EqcqpError):
    pass


class MaxIterExceeded(EqcqpError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class NegativeDeficit(EqcqpError):
    pass


class ScaleGuard(EqcqpError):
    """Oracle enumeration refused: problem too large for desk-scale verification."""


class EmptyFeasibleSet(EqcqpError):
    pass


class ParseError(EqcqpError):
    pass
