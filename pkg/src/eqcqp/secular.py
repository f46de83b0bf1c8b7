"""Stage 2 of the solver: the scalar secular equation f(lambda) = c.

The first-order optimality conditions of the decoupled problem express the
variable through the multiplier lambda; feasibility then becomes a scalar
equation whose left side f is monotone decreasing on the interval allowed by
the second-order condition.  That root is found by bisection.  When every
numerator attached to the binding pole vanishes, f stays finite there and no
interior root may exist (the trust-region style "hard case"); the multiplier
is then pinned at the pole and the constraint deficit is carried by the
blocking coordinates.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BracketFailure,
    ConstraintNotIndefinite,
    MaxIterExceeded,
    NegativeDeficit,
    NotPsd,
    PoleEvaluation,
)

DEFAULT_TOL_LAMBDA = 1e-13
DEFAULT_TOL_F = 1e-12
DEFAULT_MAX_ITER = 200

# Relative width used to merge eigenvalues into one pole cluster.
_CLUSTER_REL = 1e-9
# Poles closer than this to the evaluation point raise PoleEvaluation.
_POLE_GUARD = 1e-300


class SecularVariant(enum.Enum):
    STANDARD = "standard"
    RANK_DEF = "rank_def"
    INDEFINITE = "indefinite"


@dataclass(frozen=True)
class SecularSpec:
    """Data of the secular equation.

    standard:    f(l) = sum b_i^2 / (a_i + l)^2
    rank_def:    f(l) = sum_{i<=r} b_i^2 / (a_i + l)^2
                        + 2 sum_{i>r} (b_c,i b_i - l b_c,i^2) / a_i
    indefinite:  f(l) = sum a_i b_i^2 / (1 + l a_i)^2
    """

    variant: SecularVariant
    a: np.ndarray
    b: np.ndarray
    c: float
    r: int | None = None
    b_c: np.ndarray | None = None

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", float(self.c))
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("a and b must be 1-D arrays of equal length")
        if not math.isfinite(self.c):
            raise ValueError("c must be finite")
        if self.variant is SecularVariant.RANK_DEF:
            if self.r is None or self.b_c is None:
                raise ValueError("rank_def spec requires r and b_c")
            b_c = np.asarray(self.b_c, dtype=float)
            object.__setattr__(self, "b_c", b_c)
            if b_c.shape != a.shape:
                raise ValueError("b_c must match a in length")
            if np.any(b_c[: self.r] != 0.0):
                raise ValueError("the first r entries of b_c must be zero")
            tol = 1e-8 * max(1.0, float(np.max(np.abs(a))))
            if np.any(a < -tol):
                raise NotPsd("rank_def spec requires nonnegative a")
        if self.variant is SecularVariant.INDEFINITE:
            if np.max(a) <= 0.0 or np.min(a) >= 0.0:
                raise ConstraintNotIndefinite("indefinite spec requires a of both signs")


@dataclass(frozen=True)
class AdmissibleInterval:
    """Open interval of multipliers allowed by the second-order condition."""

    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"empty admissible interval ({self.lower}, {self.upper})")


@dataclass(frozen=True)
class HardCaseInfo:
    is_hard: bool
    blocking_indices: tuple
    f_limit: float
    lambda_pinned: float
    # weight of a blocking coordinate in the constraint: 1 for the standard
    # and rank-deficient forms, a_i for the indefinite form
    block_weight: float = 1.0


def _rational_sum(b: np.ndarray, d: np.ndarray, power: int) -> float:
    """sum b_i^2 / d_i^power with exact zeros for b_i == 0, even at d_i == 0."""
    active = b != 0.0
    safe = np.where(d == 0.0, 1.0, d)
    terms = np.where(active, b * b / safe ** power, 0.0)
    return float(np.sum(terms))


def _guard_poles(b: np.ndarray, dist: np.ndarray) -> None:
    if np.any((b != 0.0) & (np.abs(dist) <= _POLE_GUARD)):
        raise PoleEvaluation("lambda sits on an active pole of f")


def eval_f(spec: SecularSpec, lam: float) -> float:
    """Evaluate the secular function; terms with zero numerator contribute
    exactly zero even at their own pole."""
    a, b = spec.a, spec.b
    if spec.variant is SecularVariant.STANDARD:
        d = a + lam
        _guard_poles(b, d)
        return _rational_sum(b, d, 2)
    if spec.variant is SecularVariant.RANK_DEF:
        r = spec.r
        d = a[:r] + lam
        _guard_poles(b[:r], d)
        rational = _rational_sum(b[:r], d, 2)
        b_c = spec.b_c[r:]
        active = b_c != 0.0
        safe_a = np.where(active, a[r:], 1.0)
        affine = 2.0 * float(np.sum(np.where(active, (b_c * b[r:] - lam * b_c * b_c) / safe_a, 0.0)))
        return rational + affine
    d = 1.0 + lam * a
    _guard_poles(b, np.where(a != 0.0, d / np.where(a == 0.0, 1.0, a), np.inf))
    active = (b != 0.0) & (a != 0.0)
    safe = np.where(d == 0.0, 1.0, d)
    terms = np.where(active, a * b * b / safe ** 2, 0.0)
    return float(np.sum(terms))


def eval_f_prime(spec: SecularSpec, lam: float) -> float:
    """Analytic derivative of f, nonpositive on the admissible interval."""
    a, b = spec.a, spec.b
    if spec.variant is SecularVariant.STANDARD:
        d = a + lam
        return -2.0 * _rational_sum(b, d, 3)
    if spec.variant is SecularVariant.RANK_DEF:
        r = spec.r
        d = a[:r] + lam
        rational = -2.0 * _rational_sum(b[:r], d, 3)
        b_c = spec.b_c[r:]
        active = b_c != 0.0
        safe_a = np.where(active, a[r:], 1.0)
        return rational - 2.0 * float(np.sum(np.where(active, b_c * b_c / safe_a, 0.0)))
    d = 1.0 + lam * a
    active = (b != 0.0) & (a != 0.0)
    safe = np.where(d == 0.0, 1.0, d)
    terms = np.where(active, a * a * b * b / safe ** 3, 0.0)
    return -2.0 * float(np.sum(terms))


def admissible_interval(spec: SecularSpec) -> AdmissibleInterval:
    """The open multiplier interval on which the Lagrangian Hessian is PSD."""
    if spec.variant is SecularVariant.STANDARD:
        return AdmissibleInterval(lower=-float(np.min(spec.a)), upper=math.inf)
    if spec.variant is SecularVariant.RANK_DEF:
        return AdmissibleInterval(lower=-float(np.min(spec.a[: spec.r])), upper=math.inf)
    return AdmissibleInterval(lower=-1.0 / float(np.max(spec.a)),
                              upper=-1.0 / float(np.min(spec.a)))


def _cluster(values: np.ndarray, target: float) -> np.ndarray:
    tol = _CLUSTER_REL * max(1.0, abs(target))
    return np.flatnonzero(np.abs(values - target) <= tol)


def _endpoint_info(spec: SecularSpec, blocking: np.ndarray, pinned: float,
                   weight: float) -> tuple:
    """f restricted to non-blocking terms, evaluated at the pinned pole."""
    mask = np.zeros(len(spec.a), dtype=bool)
    mask[blocking] = True
    b_masked = np.where(mask, 0.0, spec.b)
    spec_reg = SecularSpec(variant=spec.variant, a=spec.a, b=b_masked, c=spec.c,
                           r=spec.r, b_c=spec.b_c)
    return float(eval_f(spec_reg, pinned)), weight


def detect_hard_case(spec: SecularSpec, tol_b: float) -> HardCaseInfo:
    """Decide whether the binding pole has all numerators below tol_b while f
    stays at or below c there, which pins the multiplier to the pole."""
    c = spec.c
    c_tol = 1e-12 * max(1.0, abs(c))

    if spec.variant in (SecularVariant.STANDARD, SecularVariant.RANK_DEF):
        head = spec.a if spec.variant is SecularVariant.STANDARD else spec.a[: spec.r]
        a_min = float(np.min(head))
        blocking = _cluster(head, a_min)
        pinned = -a_min
        f_limit, weight = _endpoint_info(spec, blocking, pinned, 1.0)
        is_hard = bool(np.all(np.abs(spec.b[blocking]) <= tol_b)) and f_limit <= c + c_tol
        return HardCaseInfo(is_hard=is_hard, blocking_indices=tuple(int(i) for i in blocking),
                            f_limit=f_limit, lambda_pinned=pinned, block_weight=weight)

    a = spec.a
    a_max, a_min = float(np.max(a)), float(np.min(a))
    left = _cluster(a, a_max)
    f_left, _ = _endpoint_info(spec, left, -1.0 / a_max, a_max)
    if np.all(np.abs(spec.b[left]) <= tol_b) and f_left <= c + c_tol:
        return HardCaseInfo(is_hard=True, blocking_indices=tuple(int(i) for i in left),
                            f_limit=f_left, lambda_pinned=-1.0 / a_max, block_weight=a_max)
    right = _cluster(a, a_min)
    f_right, _ = _endpoint_info(spec, right, -1.0 / a_min, a_min)
    if np.all(np.abs(spec.b[right]) <= tol_b) and f_right >= c - c_tol:
        return HardCaseInfo(is_hard=True, blocking_indices=tuple(int(i) for i in right),
                            f_limit=f_right, lambda_pinned=-1.0 / a_min, block_weight=a_min)
    return HardCaseInfo(is_hard=False, blocking_indices=tuple(int(i) for i in left),
                        f_limit=f_left, lambda_pinned=-1.0 / a_max, block_weight=a_max)


def bracket_root(spec: SecularSpec, interval: AdmissibleInterval, c: float):
    """Find lo < hi inside the interval with f(lo) - c > 0 >= f(hi) - c.

    f decreases on the interval, blows up toward an active lower pole and
    falls toward the upper end, so the endpoints are approached geometrically
    from inside.  Failure after 200 shrink/grow steps signals an inconsistent
    spec or an undetected hard case.
    """
    if spec.variant in (SecularVariant.STANDARD, SecularVariant.RANK_DEF):
        pole = interval.lower
        scale = max(1.0, abs(pole))
        delta = scale
        lo = pole + delta
        for _ in range(DEFAULT_MAX_ITER):
            if eval_f(spec, lo) > c:
                break
            delta *= 0.5
            lo = pole + delta
        else:
            raise BracketFailure("no point with f > c found near the lower pole")
        offset = scale
        hi = pole + offset
        for _ in range(DEFAULT_MAX_ITER):
            if eval_f(spec, hi) <= c:
                break
            offset *= 2.0
            hi = pole + offset
        else:
            raise BracketFailure("f stayed above c while growing the upper endpoint")
        return lo, hi

    left, right = interval.lower, interval.upper
    width = right - left
    delta = 0.25
    lo = left + delta * width
    for _ in range(DEFAULT_MAX_ITER):
        if eval_f(spec, lo) > c:
            break
        delta *= 0.5
        lo = left + delta * width
    else:
        raise BracketFailure("no point with f > c inside the indefinite interval")
    delta = 0.25
    hi = right - delta * width
    for _ in range(DEFAULT_MAX_ITER):
        if eval_f(spec, hi) <= c:
            break
        delta *= 0.5
        hi = right - delta * width
    else:
        raise BracketFailure("no point with f <= c inside the indefinite interval")
    if not lo < hi:
        raise BracketFailure("bracket endpoints crossed; c is outside the range of f")
    return lo, hi


def bisect(spec: SecularSpec, lo: float, hi: float, c: float,
           tol_lambda: float = DEFAULT_TOL_LAMBDA, tol_f: float = DEFAULT_TOL_F,
           max_iter: int = DEFAULT_MAX_ITER):
    """Bisection for the unique root of f - c in a valid bracket.

    Returns (lambda_star, iterations).  Stops when either the bracket width
    or the residual |f - c| falls below its relative tolerance.
    """
    f_tol = tol_f * max(1.0, abs(c))
    mid = 0.5 * (lo + hi)
    for iteration in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        f_mid = eval_f(spec, mid)
        if abs(f_mid - c) <= f_tol:
            return mid, iteration
        if f_mid > c:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol_lambda * max(1.0, abs(mid)):
            return 0.5 * (lo + hi), iteration
    raise MaxIterExceeded(f"bisection did not converge in {max_iter} iterations",
                          best=0.5 * (lo + hi))


def primal_from_lambda(spec: SecularSpec, lam: float, hard: HardCaseInfo) -> np.ndarray:
    """Recover the decoupled variable from the multiplier.

    Regular coordinates follow the first-order formula; in the hard case the
    blocking coordinates are zeroed and the constraint deficit c - f_limit is
    placed, with positive sign, on the lowest-index blocking coordinate.
    """
    a, b = spec.a, spec.b
    mask = np.zeros(len(a), dtype=bool)
    if hard.is_hard:
        lam = hard.lambda_pinned
        mask[list(hard.blocking_indices)] = True

    if spec.variant is SecularVariant.STANDARD:
        d = a + lam
        y = _safe_ratio(np.where(mask, 0.0, b), d)
    elif spec.variant is SecularVariant.RANK_DEF:
        r = spec.r
        d = a[:r] + lam
        y_head = _safe_ratio(np.where(mask[:r], 0.0, b[:r]), d)
        y_tail = _safe_ratio(b[r:] - lam * spec.b_c[r:], a[r:])
        y = np.concatenate([y_head, y_tail])
    else:
        d = 1.0 + lam * a
        y = _safe_ratio(np.where(mask, 0.0, b), d)

    if hard.is_hard:
        deficit = (spec.c - hard.f_limit) / hard.block_weight
        if deficit < -1e-10 * max(1.0, abs(spec.c)):
            raise NegativeDeficit(f"hard-case deficit {deficit:.3e} is negative")
        y[hard.blocking_indices[0]] = math.sqrt(max(deficit, 0.0))
    return y


def _safe_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = num / den
    return np.where(num == 0.0, 0.0, raw)


def decoupled_constraint(spec: SecularSpec, y: np.ndarray) -> float:
    """Left-hand side of the decoupled equality constraint at y (equals c when
    feasible)."""
    if spec.variant is SecularVariant.STANDARD:
        return float(y @ y)
    if spec.variant is SecularVariant.RANK_DEF:
        r = spec.r
        return float(y[:r] @ y[:r] + 2.0 * spec.b_c[r:] @ y[r:])
    return float(spec.a @ (y * y))


def decoupled_objective(spec: SecularSpec, y: np.ndarray) -> float:
    """Decoupled objective value at y (without the carried constant)."""
    if spec.variant is SecularVariant.INDEFINITE:
        return float(y @ y - 2.0 * spec.b @ y)
    return float(spec.a @ (y * y) - 2.0 * spec.b @ y)
