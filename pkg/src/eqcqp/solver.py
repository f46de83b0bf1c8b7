"""End-to-end solves: diagonalize, decouple, solve the secular equation,
recover the original variable.  One entry point per problem kind plus a
dispatching ``solve`` and an independent KKT-residual evaluator.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass

import numpy as np

from . import secular, transform
from .errors import DimensionMismatch, InfeasibleConstraint, NegativeDeficit
from .linalg import default_eps_rank, null_space_basis
from .secular import SecularSpec, SecularVariant
from .transform import DecoupledProblem, Kind, QcqpInstance, recover_x


class SolveStatus(enum.Enum):
    OPTIMAL = "optimal"
    TRIVIAL_C0 = "trivial_c0"
    HARD_CASE = "hard_case"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"

    @property
    def is_solved(self) -> bool:
        return self in (SolveStatus.OPTIMAL, SolveStatus.TRIVIAL_C0, SolveStatus.HARD_CASE)


@dataclass(frozen=True)
class SolveOptions:
    """Tolerances of the bisection stage and the shared rank threshold.

    ``tol_b`` is relative to the largest numerator magnitude (with an absolute
    floor) when classifying hard-case coordinates.  ``eps_rank`` of None means
    n * machine epsilon, resolved per matrix.
    """

    tol_lambda: float = secular.DEFAULT_TOL_LAMBDA
    tol_f: float = secular.DEFAULT_TOL_F
    tol_b: float = 1e-12
    eps_rank: float | None = None
    max_iter: int = secular.DEFAULT_MAX_ITER
    report_kkt: bool = True

    def __post_init__(self):
        for name in ("tol_lambda", "tol_f", "tol_b"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.eps_rank is not None and self.eps_rank <= 0.0:
            raise ValueError("eps_rank must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


DEFAULT_OPTIONS = SolveOptions()


@dataclass(frozen=True)
class Solution:
    """Solver output: optimizer, multiplier, objective and constraint residual
    in original coordinates, and the bisection iteration count."""

    x: np.ndarray | None
    lambda_star: float
    objective: float
    constraint_residual: float
    status: SolveStatus
    iterations: int
    diagnostic: str = ""


@dataclass(frozen=True)
class KktResiduals:
    stationarity: float
    feasibility: float
    second_order_min_eig: float


@dataclass(frozen=True)
class SolveReport:
    """A solve plus its diagnostics, as emitted by the command-line tools."""

    solution: Solution
    kkt: KktResiduals
    wall_time_seconds: float


def _tol_abs(rel: float, values: np.ndarray) -> float:
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    return max(rel * scale, 1e-300)


def _finish(instance: QcqpInstance, x: np.ndarray, lam: float,
            status: SolveStatus, iterations: int) -> Solution:
    return Solution(x=x, lambda_star=lam, objective=instance.objective(x),
                    constraint_residual=abs(instance.constraint(x)),
                    status=status, iterations=iterations)


def _not_solved(status: SolveStatus, diagnostic: str) -> Solution:
    return Solution(x=None, lambda_star=float("nan"), objective=float("nan"),
                    constraint_residual=float("nan"), status=status,
                    iterations=0, diagnostic=diagnostic)


def _trivial_tol(dp: DecoupledProblem, c1: float) -> float:
    shift_sq = float(np.sum(np.abs(dp.shift) ** 2))
    return 1e-12 * max(1.0, abs(c1), shift_sq)


def _bisect_spec(spec: SecularSpec, opts: SolveOptions):
    """Hard-case detection, bracketing, and bisection for a secular spec.

    Returns (lambda_star, hard_info, iterations).
    """
    hard = secular.detect_hard_case(spec, _tol_abs(opts.tol_b, spec.b))
    if hard.is_hard:
        return hard.lambda_pinned, hard, 0
    interval = secular.admissible_interval(spec)
    lo, hi = secular.bracket_root(spec, interval, spec.c)
    lam, iterations = secular.bisect(spec, lo, hi, spec.c, tol_lambda=opts.tol_lambda,
                                     tol_f=opts.tol_f, max_iter=opts.max_iter)
    return lam, hard, iterations


def solve_standard(instance: QcqpInstance, opts: SolveOptions = DEFAULT_OPTIONS) -> Solution:
    """Globally optimal solve for symmetric A0 and positive definite A1."""
    if instance.kind is not Kind.STANDARD:
        raise DimensionMismatch(f"solve_standard cannot handle kind {instance.kind}")
    sd = transform.simdiag_pd(instance.A0, instance.A1, opts.eps_rank)
    dp = transform.decouple(instance, sd)
    if dp.c <= _trivial_tol(dp, instance.c1):
        x = recover_x(np.zeros(instance.n), dp)
        return _finish(instance, x, 0.0, SolveStatus.TRIVIAL_C0, 0)
    spec = SecularSpec(variant=SecularVariant.STANDARD, a=dp.a, b=dp.b, c=dp.c)
    lam, hard, iterations = _bisect_spec(spec, opts)
    y = secular.primal_from_lambda(spec, lam, hard)
    x = recover_x(y, dp)
    status = SolveStatus.HARD_CASE if hard.is_hard else SolveStatus.OPTIMAL
    return _finish(instance, x, lam, status, iterations)


def solve_rank_deficient(instance: QcqpInstance, opts: SolveOptions = DEFAULT_OPTIONS) -> Solution:
    """Solve with both matrices PSD and a rank-deficient constraint matrix.

    Coordinates that leave the constraint entirely (zero eigenvalue in both
    forms) pin the multiplier through a consistency condition instead of
    bisection; inconsistent conditions mean no solution exists, and a linear
    objective term on such a coordinate makes the problem unbounded.
    """
    if instance.kind is not Kind.RANK_DEFICIENT:
        raise DimensionMismatch(f"solve_rank_deficient cannot handle kind {instance.kind}")
    sd = transform.simdiag_psd(instance.A0, instance.A1, opts.eps_rank)
    dp = transform.decouple(instance, sd)
    r, a, n = sd.r, dp.a, instance.n

    eps_rank = opts.eps_rank if opts.eps_rank is not None else default_eps_rank(n)
    zero_thr = eps_rank * max(1.0, float(np.max(np.abs(a))))
    i_z = np.flatnonzero(a[r:] <= zero_thr) + r

    spec = SecularSpec(variant=SecularVariant.RANK_DEF, a=a, b=dp.b, c=dp.c,
                       r=r, b_c=dp.b_c)
    if i_z.size == 0:
        return _rank_def_bisect(instance, dp, spec, opts)

    tol_bc = _tol_abs(opts.tol_b, dp.b_c[r:])
    tol_bb = _tol_abs(opts.tol_b, dp.b)
    pinning = [int(i) for i in i_z if abs(dp.b_c[i]) > tol_bc]
    unbounded = [int(i) for i in i_z if abs(dp.b_c[i]) <= tol_bc and abs(dp.b[i]) > tol_bb]
    if unbounded:
        return _not_solved(SolveStatus.UNBOUNDED,
                           f"free coordinate {unbounded[0]} has a pure linear objective term")
    if not pinning:
        # Every null coordinate is inert: solve the remaining problem and keep
        # the canonical value 0 on the free coordinates.
        keep = np.setdiff1d(np.arange(n), i_z)
        sub = SecularSpec(variant=SecularVariant.RANK_DEF, a=a[keep], b=dp.b[keep],
                          c=dp.c, r=r, b_c=dp.b_c[keep])
        sol = _rank_def_bisect(instance, dp, sub, opts, embed_keep=keep)
        return sol

    candidates = np.array([dp.b[i] / dp.b_c[i] for i in pinning])
    lam = float(np.dot(dp.b[pinning], dp.b_c[pinning]) / np.dot(dp.b_c[pinning], dp.b_c[pinning]))
    if np.max(np.abs(candidates - lam)) > 1e-8 * (1.0 + abs(lam)):
        return _not_solved(SolveStatus.INFEASIBLE,
                           "pinned multiplier candidates disagree; no KKT point exists")
    lower = -float(np.min(a[:r]))
    if lam < lower - 1e-8 * (1.0 + abs(lower)):
        return _not_solved(SolveStatus.INFEASIBLE,
                           f"pinned multiplier {lam:.6g} violates the second-order bound {lower:.6g}")
    head_d = a[:r] + lam
    if np.any((np.abs(head_d) <= 1e-300) & (np.abs(dp.b[:r]) > tol_bb)):
        return _not_solved(SolveStatus.INFEASIBLE,
                           "pinned multiplier lands on an active pole")

    y = np.zeros(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        y[:r] = np.where(dp.b[:r] == 0.0, 0.0, dp.b[:r] / head_d)
    determined = np.setdiff1d(np.arange(r, n), i_z)
    y[determined] = (dp.b[determined] - lam * dp.b_c[determined]) / a[determined]
    residual = dp.c - float(y[:r] @ y[:r]) - 2.0 * float(dp.b_c[determined] @ y[determined])
    i0 = min(pinning)
    y[i0] = residual / (2.0 * dp.b_c[i0])
    x = recover_x(y, dp)
    return _finish(instance, x, lam, SolveStatus.OPTIMAL, 0)


def _rank_def_bisect(instance, dp, spec, opts, embed_keep=None):
    tol_c = 1e-12 * max(1.0, abs(spec.c))
    tail_bc = spec.b_c[spec.r:]
    if np.all(np.abs(tail_bc) <= _tol_abs(opts.tol_b, spec.b_c)) and spec.c < -tol_c:
        return _not_solved(SolveStatus.INFEASIBLE,
                           "constraint reduces to a squared norm equal to a negative value")
    lam, hard, iterations = _bisect_spec(spec, opts)
    y_sub = secular.primal_from_lambda(spec, lam, hard)
    if embed_keep is None:
        y = y_sub
    else:
        y = np.zeros(instance.n)
        y[embed_keep] = y_sub
    x = recover_x(y, dp)
    status = SolveStatus.HARD_CASE if hard.is_hard else SolveStatus.OPTIMAL
    return _finish(instance, x, lam, status, iterations)


def solve_indefinite(instance: QcqpInstance, opts: SolveOptions = DEFAULT_OPTIONS) -> Solution:
    """Solve with positive definite A0 and an indefinite full-rank A1.

    The feasible set is an unbounded quadric; the multiplier lives in a
    bounded interval and is found by the same bisection machinery.
    """
    if instance.kind is not Kind.INDEFINITE:
        raise DimensionMismatch(f"solve_indefinite cannot handle kind {instance.kind}")
    sd = transform.simdiag_indefinite(instance.A0, instance.A1, opts.eps_rank)
    dp = transform.decouple(instance, sd)
    spec = SecularSpec(variant=SecularVariant.INDEFINITE, a=dp.a, b=dp.b, c=dp.c)
    lam, hard, iterations = _bisect_spec(spec, opts)
    y = secular.primal_from_lambda(spec, lam, hard)
    x = recover_x(y, dp)
    status = SolveStatus.HARD_CASE if hard.is_hard else SolveStatus.OPTIMAL
    return _finish(instance, x, lam, status, iterations)


def solve_augmented(instance: QcqpInstance, opts: SolveOptions = DEFAULT_OPTIONS) -> Solution:
    """Eliminate the linear equalities, solve the reduced standard problem,
    and embed the result back into original coordinates."""
    if instance.kind is not Kind.AUGMENTED:
        raise DimensionMismatch(f"solve_augmented cannot handle kind {instance.kind}")
    reduced, embedding = transform.reduce_linear(instance, opts.eps_rank)
    sol = solve_standard(reduced, opts)
    if sol.x is None:
        return sol
    x = embedding.apply(sol.x)
    return _finish(instance, x, sol.lambda_star, sol.status, sol.iterations)


def solve_matrix(instance: QcqpInstance, opts: SolveOptions = DEFAULT_OPTIONS) -> Solution:
    """Solve the complex matrix-variable problem.

    After Hermitian diagonalization the row norms of the decoupled linear
    term aggregate the columns into a single real secular equation; each
    entry of the optimizer keeps the phase of its linear coefficient.
    """
    if instance.kind is not Kind.MATRIX_COMPLEX:
        raise DimensionMismatch(f"solve_matrix cannot handle kind {instance.kind}")
    sd = transform.simdiag_pd(instance.A0, instance.A1, opts.eps_rank)
    return _solve_matrix_core(instance, sd, opts)


def _solve_matrix_core(instance: QcqpInstance, sd, opts: SolveOptions) -> Solution:
    dp = transform.decouple(instance, sd)
    n1, n2 = dp.b.shape
    if dp.c <= _trivial_tol(dp, instance.c1):
        x = recover_x(np.zeros((n1, n2), dtype=complex), dp)
        return _finish(instance, x, 0.0, SolveStatus.TRIVIAL_C0, 0)

    b_agg = np.sqrt(np.sum(np.abs(dp.b) ** 2, axis=1))
    spec = SecularSpec(variant=SecularVariant.STANDARD, a=dp.a, b=b_agg, c=dp.c)
    lam, hard, iterations = _bisect_spec(spec, opts)

    denom = dp.a + lam
    if hard.is_hard:
        rows = np.ones(n1, dtype=bool)
        rows[list(hard.blocking_indices)] = False
        Y = np.zeros((n1, n2), dtype=complex)
        Y[rows] = dp.b[rows] / denom[rows, None]
        deficit = spec.c - hard.f_limit
        if deficit < -1e-10 * max(1.0, abs(spec.c)):
            raise NegativeDeficit(f"hard-case deficit {deficit:.3e} is negative")
        Y[hard.blocking_indices[0], 0] = np.sqrt(max(deficit, 0.0))
    else:
        Y = dp.b / denom[:, None]
    x = recover_x(Y, dp)
    status = SolveStatus.HARD_CASE if hard.is_hard else SolveStatus.OPTIMAL
    return _finish(instance, x, lam, status, iterations)


def solve_frobenius_special(F: np.ndarray, G: np.ndarray, c: float,
                            opts: SolveOptions = DEFAULT_OPTIONS) -> Solution:
    """Minimize ||F - G X||_F^2 subject to ||X||_F^2 = c.

    A single SVD of G replaces the two eigendecompositions: with G = U S V^H
    the transform is the unitary V, the diagonal is S^H S, and the decoupled
    linear term is V^H G^H F.
    """
    F = np.asarray(F, dtype=complex)
    G = np.asarray(G, dtype=complex)
    if G.ndim != 2 or G.shape[1] < 1:
        raise DimensionMismatch("G must have at least one column")
    if F.ndim != 2 or F.shape[0] != G.shape[0]:
        raise DimensionMismatch("F and G must have the same number of rows")
    if c < 0.0:
        raise InfeasibleConstraint("the Frobenius-norm budget c must be nonnegative")
    n1 = G.shape[1]
    instance = QcqpInstance(
        kind=Kind.MATRIX_COMPLEX,
        A0=G.conj().T @ G,
        b0=-G.conj().T @ F,
        c0=float(np.sum(np.abs(F) ** 2)),
        A1=np.eye(n1, dtype=complex),
        b1=np.zeros((n1, F.shape[1]), dtype=complex),
        c1=-float(c),
    )
    s = np.linalg.svd(G, compute_uv=False)
    _, _, Vh = np.linalg.svd(G, full_matrices=True)
    a = np.zeros(n1)
    a[: len(s)] = s ** 2
    sd = transform.SimDiag(T_inv=Vh, a=a, variant=transform.Variant.PD_CONSTRAINT)
    return _solve_matrix_core(instance, sd, opts)


def kkt_residuals(instance: QcqpInstance, solution: Solution) -> KktResiduals:
    """First-order stationarity, feasibility, and the smallest eigenvalue of
    the Lagrangian Hessian at a solution, all from the original data.

    For the augmented kind the residuals are taken on the subspace satisfying
    the linear equalities (the multiplier only certifies that restriction).
    """
    x, lam = solution.x, solution.lambda_star
    if x is None or not np.isfinite(lam):
        nan = float("nan")
        return KktResiduals(nan, nan, nan)
    A0, A1 = instance.A0.entries, instance.A1.entries
    H = A0 + lam * A1
    grad = H @ x + instance.b0 + lam * instance.b1
    feasibility = abs(instance.constraint(x))
    if instance.kind is Kind.AUGMENTED:
        basis = null_space_basis(instance.A2)
        stationarity = float(np.linalg.norm(basis.T @ grad))
        second_order = float(np.linalg.eigvalsh(basis.T @ H @ basis)[0])
    else:
        stationarity = float(np.linalg.norm(grad))
        second_order = float(np.linalg.eigvalsh(H)[0])
    return KktResiduals(stationarity=stationarity, feasibility=feasibility,
                        second_order_min_eig=second_order)


_DISPATCH = {
    Kind.STANDARD: solve_standard,
    Kind.RANK_DEFICIENT: solve_rank_deficient,
    Kind.INDEFINITE: solve_indefinite,
    Kind.AUGMENTED: solve_augmented,
    Kind.MATRIX_COMPLEX: solve_matrix,
}


def solve(instance: QcqpInstance, opts: SolveOptions = DEFAULT_OPTIONS) -> Solution:
    """Dispatch to the entry point matching the instance kind."""
    return _DISPATCH[instance.kind](instance, opts)


def solve_report(instance: QcqpInstance, opts: SolveOptions = DEFAULT_OPTIONS) -> SolveReport:
    """Solve and collect diagnostics; wall time covers the solve call only."""
    start = time.perf_counter()
    solution = solve(instance, opts)
    elapsed = time.perf_counter() - start
    if opts.report_kkt and solution.x is not None:
        kkt = kkt_residuals(instance, solution)
    else:
        nan = float("nan")
        kkt = KktResiduals(nan, nan, nan)
    return SolveReport(solution=solution, kkt=kkt, wall_time_seconds=elapsed)
