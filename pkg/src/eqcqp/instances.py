"""Reproducible random instance generation for all five problem kinds.

Randomness comes from SplitMix64, a tiny counter-based generator with a
published reference implementation, so fixtures are bit-identical across
platforms and easy to reproduce in any language.  Uniform doubles are the top
53 bits of the mixed counter; normal variates are Box-Muller transforms of
uniform pairs; chi-square draws with one degree of freedom are squared
normals.

Recipe per kind (tau ~ chi^2_1, F Gaussian, eps = 0.1 unless overridden):

* standard:        A1 = tau1 F1 F1' + eps I,  A0 = tau0 F0 diag(f0) F0' with
                   f0 ~ U(-1, 1); c1 = b1' A1^{-1} b1 - |u| so the constraint
                   set has a strictly positive decoupled radius.
* rank_deficient:  A1 = tau1 F1 F1' with F1 of width r = floor(n/2);
                   f0 ~ U(0, 1) keeps A0 PSD; c1 uses the pseudo-inverse.
* indefinite:      A0 = tau0 F0 F0' + eps I; A1 = tau1 F1 diag(f1) F1' with
                   f1 ~ U(-1, 1), entries clamped away from zero at 1e-4
                   keeping their sign, and at least one entry of each sign.
* augmented:       standard data plus Gaussian A2 (p = floor(n/3) rows) and
                   b2; c1 is chosen from the reduced problem so the quadric
                   still meets the affine subspace.
* matrix:          complex analogues with n2 = n1 - 1 and unit-variance
                   complex Gaussian entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .transform import Kind, QcqpInstance, reduce_linear

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_TWO53 = float(2 ** 53)


class SplitMix64:
    """Counter-based SplitMix64 stream with vectorized output."""

    def __init__(self, seed: int):
        self._seed = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
        self._count = 0

    def _raw(self, k: int) -> np.ndarray:
        idx = np.arange(self._count + 1, self._count + k + 1, dtype=np.uint64)
        self._count += k
        z = self._seed + idx * _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))

    def uniform(self, k: int) -> np.ndarray:
        """k doubles uniform on (0, 1]."""
        return ((self._raw(k) >> np.uint64(11)).astype(np.float64) + 1.0) / _TWO53

    def normal(self, shape) -> np.ndarray:
        """Standard normals via the Box-Muller transform."""
        n = int(np.prod(shape)) if not isinstance(shape, int) else shape
        pairs = (n + 1) // 2
        u1 = self.uniform(pairs)
        u2 = self.uniform(pairs)
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * math.pi * u2
        z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])[:n]
        return z.reshape(shape) if not isinstance(shape, int) else z

    def chi2_1(self) -> float:
        return float(self.normal(1)[0] ** 2)


@dataclass(frozen=True)
class GenSpec:
    """What to generate: kind, size (n1 for the matrix kind), seed, and the
    optional structural overrides (rank r, row count p, column count n2)."""

    kind: Kind
    n: int
    seed: int
    epsilon: float = 0.1
    r: int | None = None
    p: int | None = None
    n2: int | None = None

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("instances need n >= 2")

    @property
    def rank(self) -> int:
        return self.r if self.r is not None else self.n // 2

    @property
    def rows(self) -> int:
        return self.p if self.p is not None else self.n // 3

    @property
    def cols(self) -> int:
        return self.n2 if self.n2 is not None else self.n - 1


def gen(spec: GenSpec) -> QcqpInstance:
    """Generate one instance; identical specs produce bit-identical data."""
    rng = SplitMix64(spec.seed)
    builder = {
        Kind.STANDARD: _gen_standard,
        Kind.RANK_DEFICIENT: _gen_rank_deficient,
        Kind.INDEFINITE: _gen_indefinite,
        Kind.AUGMENTED: _gen_augmented,
        Kind.MATRIX_COMPLEX: _gen_matrix,
    }[spec.kind]
    return builder(spec, rng)


def _standard_parts(spec: GenSpec, rng: SplitMix64):
    n = spec.n
    tau1 = rng.chi2_1()
    F1 = rng.normal((n, n))
    A1 = tau1 * (F1 @ F1.T) + spec.epsilon * np.eye(n)
    tau0 = rng.chi2_1()
    F0 = rng.normal((n, n))
    f0 = 2.0 * rng.uniform(n) - 1.0
    A0 = tau0 * (F0 * f0) @ F0.T
    b0 = rng.normal(n)
    b1 = rng.normal(n)
    return A0, b0, A1, b1


def _gen_standard(spec: GenSpec, rng: SplitMix64) -> QcqpInstance:
    A0, b0, A1, b1 = _standard_parts(spec, rng)
    margin = abs(float(rng.normal(1)[0]))
    c1 = float(b1 @ np.linalg.solve(A1, b1)) - margin
    return QcqpInstance(kind=Kind.STANDARD, A0=A0, b0=b0, c0=0.0, A1=A1, b1=b1, c1=c1)


def _gen_rank_deficient(spec: GenSpec, rng: SplitMix64) -> QcqpInstance:
    n, r = spec.n, spec.rank
    tau1 = rng.chi2_1()
    F1 = rng.normal((n, r))
    A1 = tau1 * (F1 @ F1.T)
    tau0 = rng.chi2_1()
    F0 = rng.normal((n, n))
    f0 = rng.uniform(n)
    A0 = tau0 * (F0 * f0) @ F0.T
    b0 = rng.normal(n)
    b1 = rng.normal(n)
    margin = abs(float(rng.normal(1)[0]))
    # A1 is singular here; the existence bound uses its pseudo-inverse.
    c1 = float(b1 @ np.linalg.lstsq(A1, b1, rcond=None)[0]) - margin
    return QcqpInstance(kind=Kind.RANK_DEFICIENT, A0=A0, b0=b0, c0=0.0,
                        A1=A1, b1=b1, c1=c1)


def _gen_indefinite(spec: GenSpec, rng: SplitMix64) -> QcqpInstance:
    n = spec.n
    tau0 = rng.chi2_1()
    F0 = rng.normal((n, n))
    A0 = tau0 * (F0 @ F0.T) + spec.epsilon * np.eye(n)
    tau1 = rng.chi2_1()
    F1 = rng.normal((n, n))
    f1 = 2.0 * rng.uniform(n) - 1.0
    small = np.abs(f1) < 1e-4
    f1[small] = np.where(f1[small] >= 0.0, 1e-4, -1e-4)
    # The recipe leaves a 2^(1-n) chance of a one-signed spectrum, which would
    # make A1 definite; flip the smallest-magnitude entry to restore the kind.
    if np.all(f1 > 0.0) or np.all(f1 < 0.0):
        f1[np.argmin(np.abs(f1))] *= -1.0
    A1 = tau1 * (F1 * f1) @ F1.T
    b0 = rng.normal(n)
    b1 = rng.normal(n)
    margin = abs(float(rng.normal(1)[0]))
    c1 = float(b1 @ np.linalg.solve(A1, b1)) - margin
    return QcqpInstance(kind=Kind.INDEFINITE, A0=A0, b0=b0, c0=0.0, A1=A1, b1=b1, c1=c1)


def _gen_augmented(spec: GenSpec, rng: SplitMix64) -> QcqpInstance:
    n, p = spec.n, spec.rows
    if p < 1 or p >= n:
        raise ValueError("augmented instances need 1 <= p < n (n >= 3)")
    A0, b0, A1, b1 = _standard_parts(spec, rng)
    A2 = rng.normal((p, n))
    b2 = rng.normal(p)
    margin = abs(float(rng.normal(1)[0]))
    # Choose c1 so the reduced problem keeps a strictly positive radius; a
    # plain draw can put the whole quadric away from the affine subspace.
    probe = QcqpInstance(kind=Kind.AUGMENTED, A0=A0, b0=b0, c0=0.0,
                         A1=A1, b1=b1, c1=0.0, A2=A2, b2=b2)
    reduced, _ = reduce_linear(probe)
    tilde_quad = float(reduced.b1 @ np.linalg.solve(reduced.A1.entries, reduced.b1))
    c1 = tilde_quad - margin - reduced.c1
    return QcqpInstance(kind=Kind.AUGMENTED, A0=A0, b0=b0, c0=0.0,
                        A1=A1, b1=b1, c1=c1, A2=A2, b2=b2)


def _complex_normal(rng: SplitMix64, shape) -> np.ndarray:
    re = rng.normal(shape)
    im = rng.normal(shape)
    return (re + 1j * im) / math.sqrt(2.0)


def _gen_matrix(spec: GenSpec, rng: SplitMix64) -> QcqpInstance:
    n1, n2 = spec.n, spec.cols
    tau1 = rng.chi2_1()
    F1 = _complex_normal(rng, (n1, n1))
    A1 = tau1 * (F1 @ F1.conj().T) + spec.epsilon * np.eye(n1)
    tau0 = rng.chi2_1()
    F0 = _complex_normal(rng, (n1, n1))
    f0 = 2.0 * rng.uniform(n1) - 1.0
    A0 = tau0 * (F0 * f0) @ F0.conj().T
    B0 = _complex_normal(rng, (n1, n2))
    B1 = _complex_normal(rng, (n1, n2))
    margin = abs(float(rng.normal(1)[0]))
    c1 = float(np.sum(B1.conj() * np.linalg.solve(A1, B1)).real) - margin
    return QcqpInstance(kind=Kind.MATRIX_COMPLEX, A0=A0, b0=B0, c0=0.0,
                        A1=A1, b1=B1, c1=c1)
