"""Diagonalization variants, decoupling identities, and recovery round-trips."""

import numpy as np
import pytest

from eqcqp.errors import (
    DimensionMismatch,
    FullRank,
    InfeasibleConstraint,
    NotPositiveDefinite,
    NotPsd,
    SingularConstraintMatrix,
)
from eqcqp.transform import (
    Kind,
    QcqpInstance,
    decouple,
    map_to_y,
    recover_x,
    reduce_linear,
    simdiag_indefinite,
    simdiag_pd,
    simdiag_psd,
)


def reconstruct_pair_pd(sd):
    t = np.linalg.inv(sd.T_inv)
    return t @ np.diag(sd.a) @ t.conj().T, t @ t.conj().T


class TestSimdiagPd:
    def test_identity_constraint(self):
        sd = simdiag_pd(np.diag([2.0, -1.0]), np.eye(2))
        np.testing.assert_allclose(sd.a, [-1.0, 2.0])
        np.testing.assert_allclose(sd.T_inv @ sd.T_inv.T, np.eye(2), atol=1e-14)
        np.testing.assert_allclose(np.abs(sd.T_inv), [[0.0, 1.0], [1.0, 0.0]], atol=1e-14)

    def test_scaled_identity(self):
        sd = simdiag_pd(np.eye(3), 4.0 * np.eye(3))
        np.testing.assert_allclose(sd.a, 0.25 * np.ones(3), atol=1e-14)
        np.testing.assert_allclose(sd.T_inv @ sd.T_inv.T, 0.25 * np.eye(3), atol=1e-14)

    def test_random_reconstruction(self):
        rng = np.random.default_rng(5)
        n = 12
        a0 = rng.normal(size=(n, n))
        a0 = 0.5 * (a0 + a0.T)
        f = rng.normal(size=(n, n))
        a1 = f @ f.T + 0.1 * np.eye(n)
        sd = simdiag_pd(a0, a1)
        r0, r1 = reconstruct_pair_pd(sd)
        assert np.linalg.norm(r0 - a0) <= 1e-8 * (1.0 + np.linalg.norm(a0))
        assert np.linalg.norm(r1 - a1) <= 1e-8 * (1.0 + np.linalg.norm(a1))

    def test_not_pd_rejected(self):
        with pytest.raises(NotPositiveDefinite):
            simdiag_pd(np.eye(2), np.diag([1.0, -1.0]))


class TestDecoupleStandard:
    def test_homogeneous_unit_sphere(self):
        inst = QcqpInstance(kind=Kind.STANDARD, A0=np.diag([1.0, 2.0]), b0=[0.0, 0.0],
                            c0=0.0, A1=np.eye(2), b1=[0.0, 0.0], c1=-1.0)
        dp = decouple(inst, simdiag_pd(inst.A0, inst.A1))
        np.testing.assert_allclose(dp.b, 0.0, atol=1e-15)
        assert dp.c == pytest.approx(1.0)

    def test_shifted_linear_term(self):
        inst = QcqpInstance(kind=Kind.STANDARD, A0=np.eye(2), b0=[-1.0, 0.0], c0=0.0,
                            A1=np.eye(2), b1=[0.0, 0.0], c1=-1.0)
        dp = decouple(inst, simdiag_pd(inst.A0, inst.A1))
        np.testing.assert_allclose(dp.a, [1.0, 1.0])
        np.testing.assert_allclose(dp.b, [1.0, 0.0], atol=1e-15)
        assert dp.c == pytest.approx(1.0)

    def test_identities_at_random_points(self):
        rng = np.random.default_rng(2)
        n = 10
        f0 = rng.normal(size=(n, n))
        f1 = rng.normal(size=(n, n))
        inst = QcqpInstance(kind=Kind.STANDARD, A0=0.5 * (f0 + f0.T), b0=rng.normal(size=n),
                            c0=rng.normal(), A1=f1 @ f1.T + 0.1 * np.eye(n),
                            b1=rng.normal(size=n), c1=-5.0)
        dp = decouple(inst, simdiag_pd(inst.A0, inst.A1))
        for _ in range(20):
            x = rng.normal(size=n)
            y = map_to_y(x, dp)
            obj = dp.a @ (y * y) - 2.0 * dp.b @ y + dp.const
            con = y @ y - dp.c
            assert abs(inst.objective(x) - obj) <= 1e-8 * (1.0 + abs(obj))
            assert abs(inst.constraint(x) - con) <= 1e-8 * (1.0 + abs(con))

    def test_empty_constraint_set_rejected(self):
        inst = QcqpInstance(kind=Kind.STANDARD, A0=np.eye(2), b0=[0.0, 0.0], c0=0.0,
                            A1=np.eye(2), b1=[0.0, 0.0], c1=1.0)
        with pytest.raises(InfeasibleConstraint):
            decouple(inst, simdiag_pd(inst.A0, inst.A1))


class TestSimdiagPsd:
    def test_identity_objective(self):
        sd = simdiag_psd(np.eye(2), np.diag([1.0, 0.0]))
        assert sd.r == 1
        np.testing.assert_allclose(sd.a, [1.0, 1.0], atol=1e-14)

    def test_block_diagonal_input(self):
        sd = simdiag_psd(np.diag([0.0, 3.0]), np.diag([1.0, 0.0]))
        assert sd.r == 1
        np.testing.assert_allclose(sd.a, [0.0, 3.0], atol=1e-14)

    def test_random_reconstruction(self):
        rng = np.random.default_rng(6)
        n, r = 9, 4
        f0 = rng.normal(size=(n, n))
        a0 = (f0 * rng.uniform(size=n)) @ f0.T
        f1 = rng.normal(size=(n, r))
        a1 = f1 @ f1.T
        sd = simdiag_psd(a0, a1)
        assert sd.r == r
        t = np.linalg.inv(sd.T_inv)
        e = np.zeros((n, n))
        e[:r, :r] = np.eye(r)
        assert np.linalg.norm(t @ np.diag(sd.a) @ t.T - a0) <= 1e-7 * (1.0 + np.linalg.norm(a0))
        assert np.linalg.norm(t @ e @ t.T - a1) <= 1e-7 * (1.0 + np.linalg.norm(a1))

    def test_full_rank_rejected(self):
        with pytest.raises(FullRank):
            simdiag_psd(np.eye(3), np.eye(3))

    def test_not_psd_rejected(self):
        with pytest.raises(NotPsd):
            simdiag_psd(np.diag([1.0, -1.0]), np.diag([1.0, 0.0]))


class TestSimdiagIndefinite:
    def test_diagonal(self):
        sd = simdiag_indefinite(np.eye(2), np.diag([1.0, -1.0]))
        np.testing.assert_allclose(sd.a, [-1.0, 1.0], atol=1e-14)

    def test_whitening_scales_eigenvalues(self):
        sd = simdiag_indefinite(4.0 * np.eye(2), np.diag([2.0, -2.0]))
        np.testing.assert_allclose(sd.a, [-0.5, 0.5], atol=1e-14)

    def test_random_reconstruction(self):
        rng = np.random.default_rng(8)
        n = 8
        f0 = rng.normal(size=(n, n))
        a0 = f0 @ f0.T + 0.1 * np.eye(n)
        f1 = rng.normal(size=(n, n))
        signs = rng.uniform(-1.0, 1.0, size=n)
        a1 = (f1 * signs) @ f1.T
        sd = simdiag_indefinite(a0, a1)
        t = np.linalg.inv(sd.T_inv)
        assert np.linalg.norm(t @ t.T - a0) <= 1e-8 * (1.0 + np.linalg.norm(a0))
        assert np.linalg.norm(t @ np.diag(sd.a) @ t.T - a1) <= 1e-8 * (1.0 + np.linalg.norm(a1))
        assert np.min(sd.a) < 0.0 < np.max(sd.a)

    def test_rejections(self):
        with pytest.raises(NotPositiveDefinite):
            simdiag_indefinite(np.diag([1.0, -1.0]), np.diag([1.0, -1.0]))
        with pytest.raises(SingularConstraintMatrix):
            simdiag_indefinite(np.eye(3), np.diag([1.0, 0.0, -1.0]))


class TestReduceLinear:
    def test_single_pin(self):
        inst = QcqpInstance(kind=Kind.AUGMENTED, A0=np.eye(2), b0=[0.0, 0.0], c0=0.0,
                            A1=np.eye(2), b1=[0.0, 0.0], c1=-2.0,
                            A2=np.array([[1.0, 0.0]]), b2=np.array([1.0]))
        reduced, emb = reduce_linear(inst)
        assert reduced.n == 1
        np.testing.assert_allclose(reduced.A1.entries, [[1.0]])
        assert reduced.c1 == pytest.approx(-1.0)
        np.testing.assert_allclose(emb.x_particular, [1.0, 0.0], atol=1e-14)

    def test_zero_rows_passthrough(self):
        inst = QcqpInstance(kind=Kind.AUGMENTED, A0=np.eye(3), b0=np.zeros(3), c0=0.0,
                            A1=np.eye(3), b1=np.zeros(3), c1=-1.0,
                            A2=np.zeros((0, 3)), b2=np.zeros(0))
        reduced, emb = reduce_linear(inst)
        assert reduced.n == 3
        np.testing.assert_allclose(emb.basis, np.eye(3))
        np.testing.assert_allclose(reduced.A0.entries, inst.A0.entries)

    def test_all_pinned_rejected(self):
        inst = QcqpInstance(kind=Kind.AUGMENTED, A0=np.eye(2), b0=np.zeros(2), c0=0.0,
                            A1=np.eye(2), b1=np.zeros(2), c1=-1.0,
                            A2=np.eye(2), b2=np.ones(2))
        with pytest.raises(DimensionMismatch):
            reduce_linear(inst)

    def test_identities_at_random_points(self):
        rng = np.random.default_rng(11)
        n, p = 10, 3
        f0 = rng.normal(size=(n, n))
        f1 = rng.normal(size=(n, n))
        inst = QcqpInstance(kind=Kind.AUGMENTED, A0=0.5 * (f0 + f0.T), b0=rng.normal(size=n),
                            c0=rng.normal(), A1=f1 @ f1.T + 0.1 * np.eye(n),
                            b1=rng.normal(size=n), c1=rng.normal(),
                            A2=rng.normal(size=(p, n)), b2=rng.normal(size=p))
        reduced, emb = reduce_linear(inst)
        for _ in range(20):
            xt = rng.normal(size=n - p)
            x = emb.apply(xt)
            assert abs(inst.objective(x) - reduced.objective(xt)) <= 1e-8 * (1.0 + abs(reduced.objective(xt)))
            assert abs(inst.constraint(x) - reduced.constraint(xt)) <= 1e-8 * (1.0 + abs(reduced.constraint(xt)))
            assert np.max(np.abs(inst.A2 @ x - inst.b2)) <= 1e-10 * (1.0 + np.max(np.abs(inst.b2)))


class TestRecovery:
    def test_zero_maps_to_zero(self):
        inst = QcqpInstance(kind=Kind.STANDARD, A0=np.diag([1.0, 2.0]), b0=[1.0, 1.0],
                            c0=0.0, A1=np.eye(2), b1=[0.0, 0.0], c1=-1.0)
        dp = decouple(inst, simdiag_pd(inst.A0, inst.A1))
        np.testing.assert_allclose(recover_x(np.zeros(2), dp), [0.0, 0.0], atol=1e-14)

    @pytest.mark.parametrize("kind", [Kind.STANDARD, Kind.RANK_DEFICIENT, Kind.INDEFINITE])
    def test_round_trip(self, kind):
        rng = np.random.default_rng(17)
        n = 7
        if kind is Kind.STANDARD:
            f0 = rng.normal(size=(n, n))
            a0 = 0.5 * (f0 + f0.T)
            f1 = rng.normal(size=(n, n))
            a1 = f1 @ f1.T + 0.1 * np.eye(n)
            sd_fn = simdiag_pd
        elif kind is Kind.RANK_DEFICIENT:
            f0 = rng.normal(size=(n, n))
            a0 = (f0 * rng.uniform(size=n)) @ f0.T
            f1 = rng.normal(size=(n, 3))
            a1 = f1 @ f1.T
            sd_fn = simdiag_psd
        else:
            f0 = rng.normal(size=(n, n))
            a0 = f0 @ f0.T + 0.1 * np.eye(n)
            f1 = rng.normal(size=(n, n))
            a1 = (f1 * rng.uniform(-1.0, 1.0, size=n)) @ f1.T
            sd_fn = simdiag_indefinite
        inst = QcqpInstance(kind=kind, A0=a0, b0=rng.normal(size=n), c0=0.0,
                            A1=a1, b1=rng.normal(size=n), c1=-1.0)
        dp = decouple(inst, sd_fn(inst.A0, inst.A1))
        for _ in range(10):
            x = rng.normal(size=n)
            back = recover_x(map_to_y(x, dp), dp)
            assert np.linalg.norm(back - x) <= 1e-9 * (1.0 + np.linalg.norm(x))

    def test_round_trip_matrix(self):
        rng = np.random.default_rng(23)
        n1, n2 = 5, 3
        f1 = rng.normal(size=(n1, n1)) + 1j * rng.normal(size=(n1, n1))
        a1 = f1 @ f1.conj().T + 0.1 * np.eye(n1)
        f0 = rng.normal(size=(n1, n1)) + 1j * rng.normal(size=(n1, n1))
        a0 = 0.5 * (f0 + f0.conj().T)
        b = rng.normal(size=(n1, n2)) + 1j * rng.normal(size=(n1, n2))
        inst = QcqpInstance(kind=Kind.MATRIX_COMPLEX, A0=a0, b0=b, c0=0.0,
                            A1=a1, b1=0.3 * b, c1=-2.0)
        dp = decouple(inst, simdiag_pd(inst.A0, inst.A1))
        x = rng.normal(size=(n1, n2)) + 1j * rng.normal(size=(n1, n2))
        back = recover_x(map_to_y(x, dp), dp)
        assert np.linalg.norm(back - x) <= 1e-9 * (1.0 + np.linalg.norm(x))
        # trace identities at the same point
        y = map_to_y(x, dp)
        obj = float(np.sum(dp.a[:, None] * np.abs(y) ** 2).real
                    - 2.0 * np.sum(dp.b.conj() * y).real + dp.const)
        con = float(np.sum(np.abs(y) ** 2) - dp.c)
        assert abs(inst.objective(x) - obj) <= 1e-8 * (1.0 + abs(obj))
        assert abs(inst.constraint(x) - con) <= 1e-8 * (1.0 + abs(con))
