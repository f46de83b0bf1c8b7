"""Globally optimal solves for quadratic programs with a single quadratic
equality constraint, via simultaneous diagonalization and bisection on the
multiplier, with an exhaustive KKT oracle for independent verification."""

from .errors import (
    BracketFailure,
    ConstraintNotIndefinite,
    ConvergenceFailure,
    DimensionMismatch,
    EmptyFeasibleSet,
    EqcqpError,
    FullRank,
    InfeasibleConstraint,
    MaxIterExceeded,
    NegativeDeficit,
    NonFinite,
    NotPositiveDefinite,
    NotPsd,
    ParseError,
    PoleEvaluation,
    RankDeficientRows,
    ScaleGuard,
    SingularConstraintMatrix,
)
from .instances import GenSpec, SplitMix64, gen
from .linalg import Evd, HermMatrix, SymMatrix
from .oracle import (
    KktCandidate,
    classify_validity,
    enumerate_kkt,
    oracle_minimum,
    sample_feasible,
)
from .secular import AdmissibleInterval, HardCaseInfo, SecularSpec, SecularVariant
from .solver import (
    KktResiduals,
    Solution,
    SolveOptions,
    SolveReport,
    SolveStatus,
    kkt_residuals,
    solve,
    solve_augmented,
    solve_frobenius_special,
    solve_indefinite,
    solve_matrix,
    solve_rank_deficient,
    solve_report,
    solve_standard,
)
from .transform import DecoupledProblem, Kind, QcqpInstance, SimDiag

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
