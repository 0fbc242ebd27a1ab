import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles.fields import ExpField, QuadraticField, SineField, general_position, witness_theta
from physreg.constraints import (
    DuplicatePointError,
    assemble,
    assemble_arrays,
    pair_rows,
    query_sample_block,
    sample_pair_block,
    system_size,
)
from physreg.points import EPS_G, EPS_Q, AxisScaling, Sample, SpatioTemporalPoint, ThetaLayout
from physreg.qp import QpProblem

coord = st.floats(-5, 5, allow_nan=False)
point = st.tuples(coord, coord, st.floats(0, 5)).map(np.array)

# non-slack columns of a query-sample block: u', kappa' omega, kappa_i omega
QS_FREE = np.r_[0, 1 + np.arange(9), 12 + np.arange(9)]
QS_SLACK = np.array([10, 11, 21, 22])


def sample(x, u):
    return Sample(SpatioTemporalPoint(*x), u)


def quad_u(x):
    p1, p2, t = x
    return 1 + 2 * p1 - p2 + 0.5 * t + p1 * p2 + t * t


QUAD = QuadraticField(1.0, np.array([2.0, -1.0, 0.5]),
                      np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 2.0]]))


class TestQuerySampleBlock:
    def test_zero_displacement(self):
        blk = query_sample_block(SpatioTemporalPoint(1, 2, 0.5), sample((1, 2, 0.5), 3.0))
        np.testing.assert_array_equal(blk.rows[:, 0], [1, -1, -1, 1])
        np.testing.assert_array_equal(blk.rows[:, 1:], 0)
        np.testing.assert_array_equal(blk.rhs, [3, -3, -3, 3])

    def test_slack_weights_at_r2(self):
        blk = query_sample_block(SpatioTemporalPoint(0, 0, 0), sample((2, 0, 0), 1.0))
        rows = blk.rows
        # columns: u' | query block (11) | sample block (11)
        np.testing.assert_array_equal(rows[:, 1 + EPS_G], -32)
        np.testing.assert_array_equal(rows[:, 12 + EPS_G], -32)
        q_eq, s_eq = rows[:, 1 + EPS_Q], rows[:, 12 + EPS_Q]
        np.testing.assert_array_equal(s_eq, [-16, -16, 0, 0])
        np.testing.assert_array_equal(q_eq, [0, 0, -16, -16])
        assert np.all((q_eq != 0) ^ (s_eq != 0))

    @given(point, point, st.floats(-10, 10))
    def test_row_pairing_and_slack_signs(self, xq, xi, u):
        blk = query_sample_block(xq, sample(xi, u))
        rows = blk.rows
        for a, b in ((0, 1), (2, 3)):
            np.testing.assert_array_equal(rows[a, QS_FREE], -rows[b, QS_FREE])
            np.testing.assert_array_equal(rows[a, QS_SLACK], rows[b, QS_SLACK])
        assert np.all(rows[:, QS_SLACK] <= 0)

    def test_quadratic_field_tight(self, rng):
        for _ in range(20):
            xq, xi = rng.uniform(-2, 2, 3), rng.uniform(-2, 2, 3)
            xq[2], xi[2] = abs(xq[2]), abs(xi[2])
            lay = ThetaLayout(1)
            theta = witness_theta(QUAD, xq, [xi], lay)
            assert abs(theta[0] - quad_u(xq)) < 1e-12
            blk = query_sample_block(xq, sample(xi, quad_u(xi)), layout=lay)
            cols = np.concatenate([np.arange(lay.dim)[s] for s in blk.targets])
            res = blk.rows @ theta[cols] - blk.rhs
            np.testing.assert_allclose(res, 0, atol=1e-12)


class TestSamplePairBlock:
    def test_coincident_samples_vacuous(self):
        blk = sample_pair_block(sample((1, 1, 1), 2.0), sample((1, 1, 1), 2.0))
        np.testing.assert_array_equal(blk.rows, 0)
        np.testing.assert_array_equal(blk.rhs, 0)

    @given(point, point, st.floats(-10, 10), st.floats(-10, 10))
    def test_swapping_gives_same_row_set(self, xa, xb, ua, ub):
        a, b = sample(xa, ua), sample(xb, ub)
        ab = sample_pair_block(a, b)
        ba = sample_pair_block(b, a)
        # columns of ba are (kappa_b, kappa_a); permute to (kappa_a, kappa_b)
        ba_rows = np.hstack([ba.rows[:, 11:], ba.rows[:, :11]])
        set_ab = {tuple(np.r_[r, c]) for r, c in zip(ab.rows, ab.rhs)}
        set_ba = {tuple(np.r_[r, c]) for r, c in zip(ba_rows, ba.rhs)}
        assert set_ab == set_ba

    def test_quadratic_field_tight(self, rng):
        lay = ThetaLayout(2)
        for _ in range(20):
            X = rng.uniform(0, 2, (2, 3))
            theta = witness_theta(QUAD, np.zeros(3), X, lay)
            blk = sample_pair_block(sample(X[0], quad_u(X[0])), sample(X[1], quad_u(X[1])), layout=lay,
                                    ia=0, ib=1)
            cols = np.concatenate([np.arange(lay.dim)[s] for s in blk.targets])
            np.testing.assert_allclose(blk.rows @ theta[cols] - blk.rhs, 0, atol=1e-12)

    def test_no_state_column(self):
        blk = sample_pair_block(sample((0, 0, 0), 1.0), sample((1, 0, 0), 2.0))
        assert blk.rows.shape == (4, 22)
        assert all(s.start >= 1 for s in blk.targets)


class TestAssemble:
    @pytest.mark.parametrize("k,m,dim", [(1, 4, 23), (5, 60, 67), (8, 144, 100), (10, 220, 122)])
    def test_counts(self, k, m, dim, rng):
        assert system_size(k) == (m, dim)
        X = general_position(rng, k)
        sys_ = assemble_arrays(np.full(3, 1.5), X, np.zeros(k))
        assert sys_.A.shape == (m, dim)
        assert sys_.b.shape == (m,)

    def test_block_sparsity(self, rng):
        k = 4
        X = general_position(rng, k)
        sys_ = assemble_arrays(np.full(3, 1.5), X, rng.normal(size=k))
        lay = sys_.layout
        for i in range(k):
            rows = sys_.A[4 * i:4 * i + 4]
            touched = np.flatnonzero(np.any(rows != 0, axis=0))
            allowed = np.r_[0, np.arange(lay.dim)[lay.query], np.arange(lay.dim)[lay.neighbor(i)]]
            assert set(touched) <= set(allowed)
        row = 4 * k
        for i in range(k):
            for j in range(i + 1, k):
                rows = sys_.A[row:row + 4]
                touched = set(np.flatnonzero(np.any(rows != 0, axis=0)))
                allowed = set(np.arange(lay.dim)[lay.neighbor(i)]) | set(np.arange(lay.dim)[lay.neighbor(j)])
                assert touched <= allowed
                row += 4

    @pytest.mark.parametrize("k", [1, 2, 10])
    def test_row_blocks_cover_system(self, k, rng):
        # QpProblem validates the hint against the assembled matrix
        sys_ = assemble_arrays(np.full(3, 1.5), general_position(rng, k), rng.normal(size=k))
        p = QpProblem(np.ones(sys_.layout.dim), sys_.A, sys_.b, row_blocks=sys_.row_blocks)
        w = rng.uniform(0.1, 2, sys_.m)
        np.testing.assert_allclose(p.normal_matrix(w), (sys_.A.T * w) @ sys_.A, atol=1e-12)

    def test_duplicate_neighbors_rejected(self):
        X = np.array([[0, 0, 0], [1, 0, 0], [0, 0, 0.0]])
        with pytest.raises(DuplicatePointError, match="neighbors 0 and 2"):
            assemble_arrays(np.ones(3), X, [1, 2, 3])

    def test_sample_interface_matches_arrays(self, rng):
        X = general_position(rng, 5)
        U = rng.normal(size=5)
        q = SpatioTemporalPoint(1.0, 1.0, 0.5)
        s = AxisScaling(1.0, 2.0, 0.5)
        a = assemble(q, [sample(x, u) for x, u in zip(X, U)], s)
        b = assemble_arrays(s.scale(q.as_array()), s.scale(X), U)
        np.testing.assert_array_equal(a.A, b.A)
        np.testing.assert_array_equal(a.b, b.b)

    def test_row_pairing_whole_system(self, rng):
        k = 6
        sys_ = assemble_arrays(np.full(3, 1.5), general_position(rng, k), rng.normal(size=k))
        slack = sys_.layout.slack_indices()
        free = np.setdiff1d(np.arange(sys_.layout.dim), slack)
        A = sys_.A
        np.testing.assert_array_equal(A[0::2][:, free], -A[1::2][:, free])
        np.testing.assert_array_equal(A[0::2][:, slack], A[1::2][:, slack])
        assert np.all(A[:, slack] <= 0)
        np.testing.assert_array_equal(sys_.b[0::2], -sys_.b[1::2])

    def test_quadratic_witness_k8(self, rng):
        for _ in range(10):
            f = QuadraticField.random(rng)
            X = general_position(rng, 8)
            xq = rng.uniform([0, 0, 0], [3, 3, 1])
            sys_ = assemble_arrays(xq, X, f.value(X))
            theta = witness_theta(f, xq, X, sys_.layout)
            assert sys_.residual(theta).max() <= 1e-10

    def test_random_quadratics_admit_zero_slack(self, rng):
        for _ in range(50):
            f = QuadraticField.random(rng, scale=2.0)
            k = int(rng.integers(2, 9))
            X = general_position(rng, k)
            xq = rng.uniform([0, 0, 0], [3, 3, 1])
            sys_ = assemble_arrays(xq, X, f.value(X))
            assert np.abs(sys_.residual(witness_theta(f, xq, X, sys_.layout))).min() <= 1e-10
            assert sys_.residual(witness_theta(f, xq, X, sys_.layout)).max() <= 1e-10

    def test_slack_monotonicity(self, rng):
        f = QuadraticField.random(rng)
        X = general_position(rng, 6)
        xq = np.array([1.0, 1.0, 0.5])
        sys_ = assemble_arrays(xq, X, f.value(X))
        theta = witness_theta(f, xq, X, sys_.layout)
        for idx in sys_.layout.slack_indices():
            bumped = theta.copy()
            bumped[idx] += rng.uniform(0, 10)
            assert np.all(sys_.residual(bumped) <= sys_.residual(theta) + 1e-15)

    @pytest.mark.parametrize("field", [
        SineField(2.0, np.array([0.8, -0.5, 1.1])),
        SineField(1.0, np.array([2.0, 1.0, 0.3]), phase=1.0),
        ExpField(0.5, np.array([0.3, -0.4, 0.7])),
    ])
    def test_smooth_field_feasible_with_analytic_slacks(self, field, rng):
        # remainder of the Hessian-corrected trapezoid rule is phi^(5)(eta) / 720,
        # |phi^(5)| <= M5 r^5; splitting it between the two eps_g gives M5 / 1440 each
        k = 8
        X = general_position(rng, k)
        xq = np.array([1.5, 1.5, 0.5])
        pts = np.vstack([xq, X])
        M5 = max(field.fifth_bound(a, b) for a in pts for b in pts)
        eps = np.full(k + 1, M5 / 1440 * (1 + 1e-9))
        sys_ = assemble_arrays(xq, X, field.value(X))
        theta = witness_theta(field, xq, X, sys_.layout, eps)
        assert sys_.residual(theta).max() <= 1e-12
        # and zero slacks are not enough for a non-polynomial field
        assert sys_.residual(witness_theta(field, xq, X, sys_.layout)).max() > 0

    def test_pair_rows_left_right_swap(self, rng):
        xa, xb = rng.normal(size=3), rng.normal(size=3)
        L1, R1 = pair_rows(xa, xb)
        L2, R2 = pair_rows(xb, xa)
        # swapping the points swaps the two blocks, up to the row permutation (0,1,2,3) -> (2,3,0,1)
        perm = [2, 3, 0, 1]
        np.testing.assert_allclose(L1[:, :9], R2[perm, :9], atol=1e-15)
        np.testing.assert_allclose(R1[:, :9], L2[perm, :9], atol=1e-15)

    def test_csv_dump(self, tmp_path, rng):
        sys_ = assemble_arrays(np.ones(3), general_position(rng, 3), [1.0, 2.0, 3.0])
        path = tmp_path / "ab.csv"
        sys_.to_csv(path)
        back = np.loadtxt(path, delimiter=",", skiprows=1)
        np.testing.assert_array_equal(back[:, :-1], sys_.A)
        np.testing.assert_array_equal(back[:, -1], sys_.b)
