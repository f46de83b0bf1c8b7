"""Kernel contracts: EVD, whitening factors, PSD pseudo-inverse, null spaces."""

import numpy as np
import pytest

from eqcqp.errors import NonFinite, NotPsd, RankDeficientRows
from eqcqp.linalg import (
    HermMatrix,
    SymMatrix,
    herm_evd,
    inv_sqrt_factor,
    null_space_basis,
    pinv_psd,
    sym_evd,
)


def random_symmetric(rng, n):
    m = rng.normal(size=(n, n))
    return 0.5 * (m + m.T)


def random_hermitian(rng, n):
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (m + m.conj().T)


class TestConstructors:
    def test_symmetrize_by_averaging(self):
        m = SymMatrix([[1.0, 2.0], [0.0, 1.0]])
        assert np.array_equal(m.entries, m.entries.T)
        np.testing.assert_allclose(m.entries, [[1.0, 1.0], [1.0, 1.0]])

    def test_hermitian_diagonal_exactly_real(self):
        m = HermMatrix(np.array([[1.0 + 2.0j, 3.0], [0.0, 2.0 - 1.0j]]))
        assert np.all(np.diag(m.entries).imag == 0.0)
        assert np.array_equal(m.entries, m.entries.conj().T)


class TestSymEvd:
    def test_identity(self):
        evd = sym_evd(np.eye(3))
        np.testing.assert_allclose(evd.eigenvalues, np.ones(3))
        np.testing.assert_allclose(evd.vectors @ evd.vectors.T, np.eye(3), atol=1e-14)

    def test_diagonal_input(self):
        evd = sym_evd(np.diag([3.0, 1.0]))
        np.testing.assert_allclose(evd.eigenvalues, [1.0, 3.0])
        np.testing.assert_allclose(np.abs(evd.vectors), [[0.0, 1.0], [1.0, 0.0]], atol=1e-15)

    def test_random_reconstruction(self):
        rng = np.random.default_rng(7)
        m = random_symmetric(rng, 8)
        evd = sym_evd(m)
        recon = evd.vectors @ np.diag(evd.eigenvalues) @ evd.vectors.T
        assert np.linalg.norm(recon - m) <= 1e-10 * (1.0 + np.linalg.norm(m))

    def test_nonfinite_rejected(self):
        bad = np.eye(2)
        bad[0, 1] = np.nan
        with pytest.raises(NonFinite):
            sym_evd(bad)


class TestHermEvd:
    def test_identity(self):
        evd = herm_evd(np.eye(2, dtype=complex))
        np.testing.assert_allclose(evd.eigenvalues, [1.0, 1.0])

    def test_two_by_two(self):
        # characteristic polynomial (2-t)^2 - 1 has roots 1 and 3
        m = np.array([[2.0, 1.0j], [-1.0j, 2.0]])
        evd = herm_evd(m)
        np.testing.assert_allclose(evd.eigenvalues, [1.0, 3.0], atol=1e-12)

    def test_random_reconstruction(self):
        rng = np.random.default_rng(3)
        m = random_hermitian(rng, 6)
        evd = herm_evd(m)
        recon = (evd.vectors * evd.eigenvalues) @ evd.vectors.conj().T
        assert np.linalg.norm(recon - m) <= 1e-10 * (1.0 + np.linalg.norm(m))


class TestInvSqrtFactor:
    def test_scaled_identity(self):
        s_inv, ok = inv_sqrt_factor(4.0 * np.eye(4))
        assert ok
        np.testing.assert_allclose(s_inv, 0.5 * np.eye(4), atol=1e-14)

    def test_below_threshold(self):
        _, ok = inv_sqrt_factor(np.diag([1.0, 1e-18]), eps_rank=1e-12)
        assert not ok

    def test_random_spd_whitening(self):
        rng = np.random.default_rng(1)
        f = rng.normal(size=(10, 10))
        a = f @ f.T + 0.1 * np.eye(10)
        s_inv, ok = inv_sqrt_factor(a)
        assert ok
        assert np.linalg.norm(s_inv @ a @ s_inv.T - np.eye(10)) <= 1e-8 * 10


class TestPinvPsd:
    def test_diagonal(self):
        np.testing.assert_allclose(pinv_psd(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]), atol=1e-14)

    def test_identity(self):
        np.testing.assert_allclose(pinv_psd(np.eye(3)), np.eye(3), atol=1e-14)

    def test_penrose_on_low_rank(self):
        rng = np.random.default_rng(4)
        f = rng.normal(size=(5, 2))
        b = f @ f.T
        p = pinv_psd(b)
        tol = 1e-8 * np.linalg.norm(b)
        assert np.linalg.norm(b @ p @ b - b) <= tol
        assert np.linalg.norm(p @ b @ p - p) <= tol
        assert np.linalg.norm((b @ p).T - b @ p) <= tol
        assert np.linalg.norm((p @ b).T - p @ b) <= tol

    def test_not_psd(self):
        with pytest.raises(NotPsd):
            pinv_psd(-np.eye(3))


class TestNullSpaceBasis:
    def test_single_row(self):
        basis = null_space_basis(np.array([[1.0, 0.0]]))
        assert basis.shape == (2, 1)
        np.testing.assert_allclose(np.abs(basis), [[0.0], [1.0]], atol=1e-14)

    def test_full_space_pinned(self):
        basis = null_space_basis(np.eye(3))
        assert basis.shape == (3, 0)

    def test_random_rectangular(self):
        rng = np.random.default_rng(9)
        a2 = rng.normal(size=(2, 5))
        basis = null_space_basis(a2)
        assert basis.shape == (5, 3)
        assert np.linalg.norm(a2 @ basis) <= 1e-10 * np.linalg.norm(a2)
        np.testing.assert_allclose(basis.T @ basis, np.eye(3), atol=1e-12)

    def test_dependent_rows_rejected(self):
        a2 = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]])
        with pytest.raises(RankDeficientRows):
            null_space_basis(a2)


class TestRandomizedInvariants:
    """The module-wide contracts, exercised over 100+ random instances."""

    def test_evd_invariants_real_and_complex(self):
        rng = np.random.default_rng(2024)
        for trial in range(100):
            n = int(rng.integers(2, 51))
            if trial % 2 == 0:
                m = random_symmetric(rng, n)
                evd = sym_evd(m)
                gram = evd.vectors.T @ evd.vectors
            else:
                m = random_hermitian(rng, n)
                evd = herm_evd(m)
                gram = evd.vectors.conj().T @ evd.vectors
            assert np.all(np.diff(evd.eigenvalues) >= 0.0)
            assert np.linalg.norm(gram - np.eye(n)) <= 1e-12 * n
            recon = (evd.vectors * evd.eigenvalues) @ evd.vectors.conj().T
            assert np.linalg.norm(recon - m) <= 1e-10 * (1.0 + np.linalg.norm(m))

    def test_whitening_random_spd(self):
        rng = np.random.default_rng(77)
        for _ in range(30):
            n = int(rng.integers(2, 40))
            f = rng.normal(size=(n, n))
            a = f @ f.T + 0.05 * np.eye(n)
            s_inv, ok = inv_sqrt_factor(a)
            assert ok
            assert np.linalg.norm(s_inv @ a @ s_inv.T - np.eye(n)) <= 1e-8 * n

    def test_null_space_rank_identity(self):
        rng = np.random.default_rng(55)
        for _ in range(30):
            n = int(rng.integers(2, 30))
            p = int(rng.integers(0, n))
            a2 = rng.normal(size=(p, n))
            basis = null_space_basis(a2)
            rank = np.linalg.matrix_rank(a2) if p else 0
            assert rank + basis.shape[1] == n
            if p:
                assert np.linalg.norm(a2 @ basis) <= 1e-10 * np.linalg.norm(a2)

    def test_pinv_penrose_random_psd(self):
        rng = np.random.default_rng(66)
        for _ in range(30):
            n = int(rng.integers(2, 20))
            r = int(rng.integers(1, n + 1))
            f = rng.normal(size=(n, r))
            b = f @ f.T
            p = pinv_psd(b)
            tol = 1e-8 * np.linalg.norm(b)
            assert np.linalg.norm(b @ p @ b - b) <= tol
            assert np.linalg.norm(p @ b @ p - p) <= tol
