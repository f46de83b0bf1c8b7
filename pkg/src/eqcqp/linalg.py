"""Dense symmetric/Hermitian linear-algebra kernels.

Everything downstream (diagonalization, decoupling, recovery) is built from
the four primitives here: eigendecomposition, inverse-square-root whitening
factors, PSD pseudo-inverses, and orthonormal null-space bases.  All of them
are thin, contract-checked wrappers over LAPACK via numpy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    NonFinite,
    NotPsd,
    RankDeficientRows,
)


def default_eps_rank(n: int) -> float:
    """Relative numerical-rank threshold: n * machine epsilon."""
    return n * np.finfo(float).eps


def _square(arr: np.ndarray, name: str) -> np.ndarray:
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class SymMatrix:
    """Dense real symmetric matrix; the constructor symmetrizes by averaging."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=float)
        _square(arr, "SymMatrix")
        object.__setattr__(self, "entries", 0.5 * (arr + arr.T))

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class HermMatrix:
    """Dense complex Hermitian matrix; averaging with the conjugate transpose
    makes the diagonal exactly real."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=complex)
        _square(arr, "HermMatrix")
        object.__setattr__(self, "entries", 0.5 * (arr + arr.conj().T))

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class Evd:
    """Eigendecomposition with eigenvalues sorted ascending and orthonormal
    (real orthogonal or complex unitary) eigenvector columns."""

    eigenvalues: np.ndarray
    vectors: np.ndarray


def _entries(M, wrapper, caster) -> np.ndarray:
    if isinstance(M, wrapper):
        return M.entries
    return wrapper(caster(M)).entries


def sym_entries(M) -> np.ndarray:
    """Coerce a SymMatrix or array-like to a symmetrized float array."""
    return _entries(M, SymMatrix, lambda a: np.asarray(a, dtype=float))


def herm_entries(M) -> np.ndarray:
    """Coerce a HermMatrix or array-like to a Hermitized complex array."""
    return _entries(M, HermMatrix, lambda a: np.asarray(a, dtype=complex))


def _checked_eigh(A: np.ndarray) -> Evd:
    if not np.all(np.isfinite(A.real)) or (np.iscomplexobj(A) and not np.all(np.isfinite(A.imag))):
        raise NonFinite("matrix contains NaN or Inf")
    try:
        w, V = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK rarely fails here
        raise ConvergenceFailure(str(exc)) from exc
    return Evd(eigenvalues=w, vectors=V)


def sym_evd(M) -> Evd:
    """Eigendecomposition of a real symmetric matrix, eigenvalues ascending."""
    return _checked_eigh(sym_entries(M))


def herm_evd(M) -> Evd:
    """Eigendecomposition of a complex Hermitian matrix, eigenvalues ascending
    (eigenvalues are real; eigenvectors form a unitary matrix)."""
    return _checked_eigh(herm_entries(M))


def inv_sqrt_factor(A, eps_rank: float | None = None):
    """Whitening factor S_inv with S_inv @ A @ S_inv^T = I for positive definite A.

    Built from the eigendecomposition A = U diag(w) U^T as
    S_inv = diag(w^-1/2) U^T (conjugate transpose in the Hermitian case).

    Returns
    -------
    (S_inv, rank_ok) : S_inv is None and rank_ok is False when any eigenvalue
        falls at or below eps_rank * max(1, w_max), i.e. A is not numerically
        positive definite.  The caller decides whether that is an error or a
        reroute to the rank-deficient path.
    """
    arr = herm_entries(A) if np.iscomplexobj(np.asarray(getattr(A, "entries", A))) else sym_entries(A)
    evd = _checked_eigh(arr)
    w = evd.eigenvalues
    if eps_rank is None:
        eps_rank = default_eps_rank(len(w))
    if w[0] <= eps_rank * max(1.0, w[-1] if len(w) else 0.0):
        return None, False
    S_inv = (evd.vectors / np.sqrt(w)).conj().T
    return S_inv, True


def pinv_psd(B, eps_rank: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of a PSD matrix via its eigendecomposition.

    Eigenvalues below eps_rank * w_max are treated as exact zeros.  Raises
    NotPsd when the smallest eigenvalue is meaningfully negative.
    """
    arr = herm_entries(B) if np.iscomplexobj(np.asarray(getattr(B, "entries", B))) else sym_entries(B)
    evd = _checked_eigh(arr)
    w = evd.eigenvalues
    if eps_rank is None:
        eps_rank = default_eps_rank(len(w))
    w_max = max(w[-1], 0.0) if len(w) else 0.0
    if len(w) and w[0] < -1e-8 * max(1.0, w_max):
        raise NotPsd(f"minimum eigenvalue {w[0]:.3e} is negative beyond tolerance")
    inv_w = np.where(w > eps_rank * w_max, 1.0 / np.where(w > 0, w, 1.0), 0.0)
    V = evd.vectors
    return (V * inv_w) @ V.conj().T


def null_space_basis(A2: np.ndarray, eps_rank: float | None = None) -> np.ndarray:
    """Orthonormal basis of the null space of a full-row-rank p x N matrix.

    The result has exactly N - p columns and satisfies A2 @ basis = 0.  Row
    rank is checked through the singular values (the smallest singular value
    of A2 @ A2^T is the square of A2's smallest singular value).
    """
    A2 = np.asarray(A2, dtype=float)
    if A2.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {A2.shape}")
    p, n = A2.shape
    if p > n:
        raise DimensionMismatch(f"more rows than columns: {p} > {n}")
    if p == 0:
        return np.eye(n)
    s = np.linalg.svd(A2, compute_uv=False)
    if eps_rank is None:
        eps_rank = default_eps_rank(n)
    if s[-1] ** 2 <= eps_rank * max(1.0, s[0] ** 2):
        raise RankDeficientRows("rows of the linear constraint matrix are dependent")
    _, _, Vt = np.linalg.svd(A2, full_matrices=True)
    return Vt[p:].T
