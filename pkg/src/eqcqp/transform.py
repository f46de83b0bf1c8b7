"""Stage 1 of the solver: congruence transforms that diagonalize both quadratic
forms at once, plus the affine change of variables that decouples the problem
coordinate-wise and its inverse (recovery).

Three diagonalization variants are supported:

* ``PD_CONSTRAINT``  - constraint matrix positive definite; it is whitened to
  the identity and the objective matrix becomes diagonal.
* ``PSD_RANK``       - both matrices PSD, constraint of rank r < N; the
  constraint becomes blkdiag(I_r, 0) via a block elimination built on the
  PSD range-inclusion property.
* ``PD_OBJECTIVE``   - objective matrix positive definite (whitened to I),
  indefinite full-rank constraint becomes diagonal.

The transform T is never inverted in the solve path; only T^{-1} (as built)
and transposed applications are used.  Tests may form T explicitly to check
reconstruction.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    FullRank,
    InfeasibleConstraint,
    NotPositiveDefinite,
    NotPsd,
    SingularConstraintMatrix,
)
from .linalg import (
    HermMatrix,
    SymMatrix,
    default_eps_rank,
    herm_evd,
    inv_sqrt_factor,
    null_space_basis,
    pinv_psd,
    sym_evd,
)


class Kind(enum.Enum):
    STANDARD = "standard"
    RANK_DEFICIENT = "rank_deficient"
    INDEFINITE = "indefinite"
    AUGMENTED = "augmented"
    MATRIX_COMPLEX = "matrix"


class Variant(enum.Enum):
    PD_CONSTRAINT = "pd_constraint"
    PSD_RANK = "psd_rank"
    PD_OBJECTIVE = "pd_objective"


@dataclass(frozen=True)
class QcqpInstance:
    """Problem data for

        minimize    x' A0 x + 2 b0' x + c0
        subject to  x' A1 x + 2 b1' x + c1 = 0
        (optionally A2 x = b2)

    with real symmetric matrices for the vector kinds and Hermitian matrices
    (trace forms, matrix variable) for the complex matrix kind.
    """

    kind: Kind
    A0: SymMatrix | HermMatrix
    b0: np.ndarray
    c0: float
    A1: SymMatrix | HermMatrix
    b1: np.ndarray
    c1: float
    A2: np.ndarray | None = None
    b2: np.ndarray | None = None

    def __post_init__(self):
        wrapper = HermMatrix if self.kind is Kind.MATRIX_COMPLEX else SymMatrix
        for name in ("A0", "A1"):
            value = getattr(self, name)
            if not isinstance(value, wrapper):
                value = wrapper(np.asarray(value))
            object.__setattr__(self, name, value)
        dtype = complex if self.kind is Kind.MATRIX_COMPLEX else float
        b0 = np.asarray(self.b0, dtype=dtype)
        b1 = np.asarray(self.b1, dtype=dtype)
        object.__setattr__(self, "b0", b0)
        object.__setattr__(self, "b1", b1)
        object.__setattr__(self, "c0", float(self.c0))
        object.__setattr__(self, "c1", float(self.c1))
        n = self.A0.n
        if self.A1.n != n:
            raise DimensionMismatch("A0 and A1 have different sizes")
        if b0.shape != b1.shape or b0.shape[0] != n:
            raise DimensionMismatch("linear terms do not match the matrix size")
        if self.kind is Kind.MATRIX_COMPLEX:
            if b0.ndim != 2:
                raise DimensionMismatch("matrix kind requires b0, b1 of shape (n1, n2)")
        elif b0.ndim != 1:
            raise DimensionMismatch("vector kinds require 1-D b0, b1")
        if self.kind is Kind.AUGMENTED:
            if self.A2 is None or self.b2 is None:
                raise DimensionMismatch("augmented kind requires A2 and b2")
            A2 = np.asarray(self.A2, dtype=float)
            b2 = np.asarray(self.b2, dtype=float)
            if A2.ndim != 2 or A2.shape[1] != n or b2.shape != (A2.shape[0],):
                raise DimensionMismatch("A2 must be p x n with matching b2")
            object.__setattr__(self, "A2", A2)
            object.__setattr__(self, "b2", b2)

    @property
    def n(self) -> int:
        return self.A0.n

    @property
    def n2(self) -> int | None:
        return self.b0.shape[1] if self.kind is Kind.MATRIX_COMPLEX else None

    def objective(self, x: np.ndarray) -> float:
        if self.kind is Kind.MATRIX_COMPLEX:
            quad = np.sum(x.conj() * (self.A0.entries @ x)).real
            lin = 2.0 * np.sum(self.b0.conj() * x).real
            return float(quad + lin + self.c0)
        return float(x @ self.A0.entries @ x + 2.0 * self.b0 @ x + self.c0)

    def constraint(self, x: np.ndarray) -> float:
        if self.kind is Kind.MATRIX_COMPLEX:
            quad = np.sum(x.conj() * (self.A1.entries @ x)).real
            lin = 2.0 * np.sum(self.b1.conj() * x).real
            return float(quad + lin + self.c1)
        return float(x @ self.A1.entries @ x + 2.0 * self.b1 @ x + self.c1)


@dataclass(frozen=True)
class SimDiag:
    """Result of a simultaneous diagonalization: the inverse transform T^{-1},
    the diagonal ``a`` of the diagonalized form, the variant, and the rank of
    the constraint matrix in the PSD_RANK variant."""

    T_inv: np.ndarray
    a: np.ndarray
    variant: Variant
    r: int | None = None


@dataclass(frozen=True)
class LinearEmbedding:
    """Affine map from reduced to original coordinates after eliminating
    linear equality constraints: x = x_particular + basis @ x_reduced."""

    x_particular: np.ndarray
    basis: np.ndarray

    def apply(self, x_reduced: np.ndarray) -> np.ndarray:
        return self.x_particular + self.basis @ x_reduced


@dataclass(frozen=True)
class DecoupledProblem:
    """Coordinate-wise problem after diagonalization and the affine shift:

    * standard / matrix:  min sum a_i y_i^2 - 2 b_i y_i   s.t. |y|^2 = c
    * rank-deficient:     same objective, constraint sum_{i<=r} y_i^2
                          + 2 sum_{i>r} b_c,i y_i = c
    * indefinite:         min |y|^2 - 2 b'y  s.t. sum a_i y_i^2 = c

    ``const`` carries the objective offset so reported values live in original
    coordinates; ``shift`` is the affine offset of the variable map
    y = T' x + shift.
    """

    kind: Kind
    a: np.ndarray
    b: np.ndarray
    c: float
    const: float
    sd: SimDiag
    shift: np.ndarray
    r: int | None = None
    b_c: np.ndarray | None = None


def simdiag_pd(A0, A1, eps_rank: float | None = None) -> SimDiag:
    """Diagonalize (A0, A1) with A1 positive definite: A1 -> I, A0 -> diag(a).

    Works for real symmetric and complex Hermitian pairs alike.  ``a`` is
    sorted ascending.
    """
    S_inv, ok = inv_sqrt_factor(A1, eps_rank)
    if not ok:
        raise NotPositiveDefinite("constraint matrix A1 is not numerically positive definite")
    W = S_inv @ _entries_like(A0, S_inv) @ S_inv.conj().T
    evd = herm_evd(W) if np.iscomplexobj(W) else sym_evd(W)
    T_inv = evd.vectors.conj().T @ S_inv
    return SimDiag(T_inv=T_inv, a=evd.eigenvalues, variant=Variant.PD_CONSTRAINT)


def _entries_like(M, ref: np.ndarray) -> np.ndarray:
    entries = M.entries if isinstance(M, (SymMatrix, HermMatrix)) else np.asarray(M)
    if np.iscomplexobj(ref):
        return HermMatrix(entries.astype(complex)).entries
    return SymMatrix(entries).entries


def _psd_check(entries: np.ndarray, name: str) -> np.ndarray:
    w = np.linalg.eigvalsh(entries)
    if w[0] < -1e-8 * max(1.0, w[-1]):
        raise NotPsd(f"{name} has eigenvalue {w[0]:.3e} below the PSD tolerance")
    return w


def simdiag_psd(A0, A1, eps_rank: float | None = None) -> SimDiag:
    """Diagonalize a PSD pair with rank-deficient A1: A1 -> blkdiag(I_r, 0),
    A0 -> diag(a) with a = (d1, d2), each block sorted ascending.

    The construction factors A1, whitens A0 by that factor, block-eliminates
    the off-diagonal coupling through the pseudo-inverse of the trailing
    block, and diagonalizes the two decoupled blocks.
    """
    A0e = SymMatrix(np.asarray(getattr(A0, "entries", A0))).entries
    A1e = SymMatrix(np.asarray(getattr(A1, "entries", A1))).entries
    n = A1e.shape[0]
    if A0e.shape[0] != n:
        raise DimensionMismatch("A0 and A1 have different sizes")
    if eps_rank is None:
        eps_rank = default_eps_rank(n)
    _psd_check(A0e, "A0")
    w1 = _psd_check(A1e, "A1")
    evd1 = sym_evd(A1e)
    thr = eps_rank * max(1.0, w1[-1])
    r = int(np.count_nonzero(evd1.eigenvalues > thr))
    if r == n:
        raise FullRank("A1 has full numerical rank; use the positive definite path")
    if r == 0:
        raise SingularConstraintMatrix("A1 is numerically zero; the constraint is not quadratic")

    U_top = evd1.vectors[:, n - r:]
    w_top = evd1.eigenvalues[n - r:]
    U_zero = evd1.vectors[:, : n - r]
    # S1 = [U_top * sqrt(w_top), U_zero] gives A1 = S1 blkdiag(I_r, 0) S1'.
    S1_inv = np.vstack([(U_top / np.sqrt(w_top)).T, U_zero.T])

    B = S1_inv @ A0e @ S1_inv.T
    B = 0.5 * (B + B.T)
    B12 = B[:r, r:]
    B22 = B[r:, r:]
    M = B12 @ pinv_psd(B22, eps_rank)
    schur = B[:r, :r] - M @ B12.T
    evd_s = sym_evd(schur)
    evd_2 = sym_evd(B22)

    # T^{-1} = S3' S2^{-1} S1^{-1} with S2^{-1} = [[I, -M], [0, I]].
    top = evd_s.vectors.T @ (S1_inv[:r] - M @ S1_inv[r:])
    bottom = evd_2.vectors.T @ S1_inv[r:]
    T_inv = np.vstack([top, bottom])
    a = np.concatenate([evd_s.eigenvalues, evd_2.eigenvalues])
    return SimDiag(T_inv=T_inv, a=a, variant=Variant.PSD_RANK, r=r)


def simdiag_indefinite(A0, A1, eps_rank: float | None = None) -> SimDiag:
    """Diagonalize with A0 positive definite: A0 -> I, A1 -> diag(a) where the
    entries of ``a`` (ascending) carry both signs for an indefinite A1."""
    S_inv, ok = inv_sqrt_factor(A0, eps_rank)
    if not ok:
        raise NotPositiveDefinite("objective matrix A0 is not numerically positive definite")
    A1e = SymMatrix(np.asarray(getattr(A1, "entries", A1))).entries
    W = S_inv @ A1e @ S_inv.T
    evd = sym_evd(W)
    if eps_rank is None:
        eps_rank = default_eps_rank(len(evd.eigenvalues))
    if np.min(np.abs(evd.eigenvalues)) <= eps_rank * max(1.0, np.max(np.abs(evd.eigenvalues))):
        raise SingularConstraintMatrix("whitened A1 has an eigenvalue numerically at zero")
    T_inv = evd.vectors.T @ S_inv
    return SimDiag(T_inv=T_inv, a=evd.eigenvalues, variant=Variant.PD_OBJECTIVE)


def decouple(instance: QcqpInstance, sd: SimDiag) -> DecoupledProblem:
    """Apply the affine change of variables induced by ``sd`` and return the
    coordinate-wise problem together with the data needed to map back."""
    if instance.kind is Kind.AUGMENTED:
        raise DimensionMismatch("reduce the linear constraints before decoupling")
    _check_variant(instance.kind, sd.variant)

    T_inv = sd.T_inv
    a = sd.a
    beta = T_inv @ instance.b1
    gamma = T_inv @ instance.b0

    if instance.kind is Kind.MATRIX_COMPLEX:
        b = a[:, None] * beta - gamma
        c = float(np.sum(np.abs(beta) ** 2) - instance.c1)
        const = float(np.sum(a[:, None] * np.abs(beta) ** 2).real
                      - 2.0 * np.sum(gamma.conj() * beta).real + instance.c0)
        return DecoupledProblem(kind=instance.kind, a=a, b=b, c=c, const=const,
                                sd=sd, shift=beta)

    if sd.variant is Variant.PD_OBJECTIVE:
        shift = beta / a
        b = shift - gamma
        c = float(beta @ shift - instance.c1)
        const = float(shift @ shift - 2.0 * gamma @ shift + instance.c0)
        return DecoupledProblem(kind=instance.kind, a=a, b=b, c=c, const=const,
                                sd=sd, shift=shift)

    b = a * beta - gamma
    const = float((a * beta) @ beta - 2.0 * gamma @ beta + instance.c0)
    if sd.variant is Variant.PSD_RANK:
        r = sd.r
        b_c = np.concatenate([np.zeros(r), beta[r:]])
        c = float(beta @ beta + beta[r:] @ beta[r:] - instance.c1)
        return DecoupledProblem(kind=instance.kind, a=a, b=b, c=c, const=const,
                                sd=sd, shift=beta, r=r, b_c=b_c)

    c = float(beta @ beta - instance.c1)
    if instance.kind is Kind.STANDARD and c < -1e-10 * (1.0 + abs(instance.c1) + float(beta @ beta)):
        raise InfeasibleConstraint(
            f"constraint set is empty: decoupled radius c = {c:.3e} is negative")
    return DecoupledProblem(kind=instance.kind, a=a, b=b, c=c, const=const,
                            sd=sd, shift=beta)


def _check_variant(kind: Kind, variant: Variant) -> None:
    expected = {
        Kind.STANDARD: Variant.PD_CONSTRAINT,
        Kind.MATRIX_COMPLEX: Variant.PD_CONSTRAINT,
        Kind.RANK_DEFICIENT: Variant.PSD_RANK,
        Kind.INDEFINITE: Variant.PD_OBJECTIVE,
    }
    if expected[kind] is not variant:
        raise DimensionMismatch(f"diagonalization variant {variant} does not match kind {kind}")


def reduce_linear(instance: QcqpInstance, eps_rank: float | None = None):
    """Eliminate linear equality constraints A2 x = b2 by the particular /
    homogeneous split, returning the reduced standard instance over the
    null-space coordinates and the embedding back to original coordinates."""
    if instance.A2 is None or instance.A2.shape[0] == 0:
        n = instance.n
        embedding = LinearEmbedding(x_particular=np.zeros(n), basis=np.eye(n))
        reduced = QcqpInstance(kind=Kind.STANDARD, A0=instance.A0, b0=instance.b0,
                               c0=instance.c0, A1=instance.A1, b1=instance.b1,
                               c1=instance.c1)
        return reduced, embedding
    A2 = instance.A2
    b2 = instance.b2
    p, n = A2.shape
    if p >= n:
        raise DimensionMismatch("linear constraints pin every degree of freedom")
    basis = null_space_basis(A2, eps_rank)
    x_p = A2.T @ np.linalg.solve(A2 @ A2.T, b2)

    A0 = instance.A0.entries
    A1 = instance.A1.entries
    b0, b1 = instance.b0, instance.b1
    reduced = QcqpInstance(
        kind=Kind.STANDARD,
        A0=basis.T @ A0 @ basis,
        b0=basis.T @ (A0 @ x_p + b0),
        c0=float(x_p @ A0 @ x_p + 2.0 * b0 @ x_p + instance.c0),
        A1=basis.T @ A1 @ basis,
        b1=basis.T @ (A1 @ x_p + b1),
        c1=float(x_p @ A1 @ x_p + 2.0 * b1 @ x_p + instance.c1),
    )
    return reduced, LinearEmbedding(x_particular=x_p, basis=basis)


def recover_x(y_star: np.ndarray, dp: DecoupledProblem) -> np.ndarray:
    """Map an optimal decoupled variable back to original coordinates.

    For instances that went through ``reduce_linear`` this returns the
    reduced-space variable; the caller composes the stored embedding.
    """
    if y_star.shape != dp.shift.shape:
        raise DimensionMismatch(f"y has shape {y_star.shape}, expected {dp.shift.shape}")
    return dp.sd.T_inv.conj().T @ (y_star - dp.shift)


def map_to_y(x: np.ndarray, dp: DecoupledProblem) -> np.ndarray:
    """Forward map x -> y (diagnostic / test helper; the solve path only ever
    needs the inverse direction)."""
    return np.linalg.solve(dp.sd.T_inv.conj().T, x) + dp.shift
