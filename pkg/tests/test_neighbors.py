import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import physreg.neighbors as nb
from physreg.neighbors import NeighborConfig, SampleIndex, default_metric, select_neighbors
from physreg.points import AxisScaling, Snapshot, SpatioTemporalPoint

UNIT = AxisScaling()


def random_snapshots(rng, n_snap=4, per=30):
    return [Snapshot(k, 0.1 * k, rng.uniform(0, 10, (per, 2)), rng.normal(size=per))
            for k in range(n_snap)]


class TestConfig:
    def test_k_below_four_rejected(self):
        with pytest.raises(ValueError):
            NeighborConfig(3)

    def test_default_time_scale_maps_interval_to_spacing(self):
        # 10x10 lattice on [0, 9]^2 has spacing ~0.9; dt = 0.1
        a, b = np.meshgrid(np.arange(10.0), np.arange(10.0), indexing="ij")
        P = np.column_stack([a.ravel(), b.ravel()])
        snaps = [Snapshot(k, 0.1 * k, P, np.zeros(100)) for k in range(3)]
        m = default_metric(snaps)
        np.testing.assert_allclose(m.factors, [1.0, 1.0, 0.9 / 0.1])


class TestSelection:
    def test_query_at_sample_comes_first(self, rng):
        snaps = random_snapshots(rng)
        x = snaps[2].points[7]
        sel = select_neighbors(x, snaps, NeighborConfig(6))
        np.testing.assert_array_equal(sel.X[0], x)
        assert sel.U[0] == snaps[2].u[7]

    def test_matches_sorted_distances(self, rng):
        snaps = random_snapshots(rng)
        idx = SampleIndex(snaps, UNIT)
        q = np.array([4.2, 5.1, 0.17])
        sel = select_neighbors(q, idx, NeighborConfig(10))
        d = np.linalg.norm(idx.X - q, axis=1)
        np.testing.assert_array_equal(np.sort(sel.indices), np.sort(np.argsort(d)[:10]))
        assert np.all(np.diff(d[sel.indices]) >= 0)

    def test_k_equal_to_total_returns_everything(self, rng):
        snaps = random_snapshots(rng, 2, 5)
        sel = select_neighbors((5, 5, 0), snaps, NeighborConfig(10))
        assert not sel.undersized
        np.testing.assert_array_equal(np.sort(sel.indices), np.arange(10))

    def test_undersized_returns_all_and_flags(self, rng):
        snaps = random_snapshots(rng, 1, 6)
        sel = select_neighbors((5, 5, 0), snaps, NeighborConfig(10))
        assert sel.undersized
        assert len(sel.indices) == 6

    def test_tie_break_prefers_smaller_t_then_p1_then_p2(self):
        # five samples at unit distance from the query (5, 5, 0.5) in unit metric
        q = (5.0, 5.0, 0.5)
        snaps = [
            Snapshot(0, 0.0, [[5.0, 5.0]], [1.0]),   # dt = 0.5, distance 0.5: nearest
            Snapshot(1, 0.5, [[5.0, 6.0], [5.0, 4.0], [6.0, 5.0], [4.0, 5.0]], [2.0, 3.0, 4.0, 5.0]),
            Snapshot(2, 1.5, [[5.0, 5.0]], [6.0]),   # dt = 1.0
        ]
        sel = select_neighbors(q, SampleIndex(snaps, UNIT), NeighborConfig(4))
        # distance 0.5 first; then four at distance 1 ordered by (t, p1, p2)
        np.testing.assert_array_equal(sel.X[:, :2], [[5, 5], [4, 5], [5, 4], [5, 6]])
        assert sel.X[0, 2] == 0.0
        sel5 = select_neighbors(q, SampleIndex(snaps, UNIT), NeighborConfig(6))
        np.testing.assert_array_equal(sel5.X[-1], [5, 5, 1.5])

    def test_tie_between_times_picks_earlier(self):
        snaps = [Snapshot(0, 0.0, [[0.0, 0.0]], [1.0]), Snapshot(1, 2.0, [[0.0, 0.0]], [2.0]),
                 Snapshot(2, 5.0, [[9.0, 9.0], [9.0, 8.0], [8.0, 9.0], [8.0, 8.0]], np.zeros(4))]
        sel = select_neighbors((0.0, 0.0, 1.0), SampleIndex(snaps, UNIT), NeighborConfig(4))
        np.testing.assert_array_equal(sel.X[:2, 2], [0.0, 2.0])

    def test_sample_view(self, rng):
        sel = select_neighbors((1, 1, 0.1), random_snapshots(rng), NeighborConfig(4))
        s = sel.samples
        assert isinstance(s[0].point, SpatioTemporalPoint)
        assert s[0].u == sel.U[0]


class TestInvariants:
    @settings(max_examples=40)
    @given(st.integers(0, 2**31 - 1), st.integers(4, 20))
    def test_permutation_invariance(self, seed, k):
        rng = np.random.default_rng(seed)
        # coarse integer coordinates force many exact ties
        P = rng.integers(0, 4, (40, 2)).astype(float)
        T = rng.integers(0, 3, 40) * 0.5
        U = rng.normal(size=40)
        q = np.array([1.5, 2.0, 0.5])

        def chosen(order):
            snaps = [Snapshot(i, t, P[order][T[order] == t], U[order][T[order] == t])
                     for i, t in enumerate(np.unique(T))]
            idx = SampleIndex(snaps, UNIT)
            sel = select_neighbors(q, idx, NeighborConfig(k))
            return {tuple(r) for r in sel.X}, sel.X

        a_set, a_X = chosen(np.arange(40))
        b_set, b_X = chosen(rng.permutation(40))
        assert a_set == b_set
        # only exact duplicates can swap places, so the ordered coordinates agree
        np.testing.assert_array_equal(a_X, b_X)

    @settings(max_examples=40)
    @given(st.integers(0, 2**31 - 1), st.integers(4, 30))
    def test_monotone_in_k(self, seed, k):
        rng = np.random.default_rng(seed)
        snaps = random_snapshots(rng, 3, 12)
        idx = SampleIndex(snaps, UNIT)
        q = rng.uniform(0, 10, 3)
        a, _ = idx.nearest(q, k)
        b, _ = idx.nearest(q, k + 1)
        assert set(a) <= set(b)

    def test_deterministic(self, rng):
        snaps = random_snapshots(rng)
        a = select_neighbors((3, 3, 0.2), snaps).indices
        b = select_neighbors((3, 3, 0.2), snaps).indices
        np.testing.assert_array_equal(a, b)

    def test_index_is_read_only(self, rng):
        idx = SampleIndex(random_snapshots(rng))
        with pytest.raises(ValueError):
            idx.U[0] = 1.0

    def test_empty_data_rejected(self):
        with pytest.raises(ValueError):
            SampleIndex([])


class TestLargeIndex:
    def test_tree_path_agrees_with_brute_force(self, rng, monkeypatch):
        P = rng.integers(0, 30, (600, 2)).astype(float)
        snaps = [Snapshot(k, 0.1 * k, P, rng.normal(size=600)) for k in range(3)]
        brute = SampleIndex(snaps, UNIT)
        monkeypatch.setattr(nb, "BRUTE_FORCE_LIMIT", 100)
        tree = SampleIndex(snaps, UNIT)
        assert brute._tree is None and tree._tree is not None
        for q in rng.uniform(0, 30, (50, 3)) * [1, 1, 0.01]:
            for k in (4, 10, 25):
                np.testing.assert_array_equal(brute.nearest(q, k)[0], tree.nearest(q, k)[0])
