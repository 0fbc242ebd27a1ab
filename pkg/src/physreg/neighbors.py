"""k-nearest-neighbor selection over spatio-temporal samples."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .points import AxisScaling, Sample, Snapshot, SpatioTemporalPoint

BRUTE_FORCE_LIMIT = 100_000


@dataclass(frozen=True)
class NeighborConfig:
    k: int = 10
    metric: AxisScaling | None = None  # None: derive from the data

    def __post_init__(self):
        if self.k < 4:
            raise ValueError("k must be at least 4")


def default_metric(snapshots: Sequence[Snapshot]) -> AxisScaling:
    """Unit space scales; one snapshot interval maps to one typical spacing."""
    if not snapshots:
        return AxisScaling()
    snap = max(snapshots, key=len)
    extent = np.ptp(snap.p, axis=0) if len(snap) > 1 else np.ones(2)
    area = float(np.prod(np.where(extent > 0, extent, 1.0)))
    spacing = np.sqrt(area / max(len(snap), 1))
    times = np.unique([s.t for s in snapshots])
    if times.size < 2 or spacing <= 0:
        return AxisScaling()
    dt = float(np.median(np.diff(times)))
    return AxisScaling(1.0, 1.0, spacing / dt)


class SampleIndex:
    """Flattened, read-only view of a data set for repeated queries."""

    def __init__(self, snapshots: Sequence[Snapshot], metric: AxisScaling | None = None):
        snapshots = list(snapshots)
        if not snapshots:
            raise ValueError("no data")
        self.snapshots = snapshots
        self.X = np.vstack([s.points for s in snapshots])
        self.U = np.concatenate([s.u for s in snapshots])
        self.X.setflags(write=False)
        self.U.setflags(write=False)
        self.metric = metric or default_metric(snapshots)
        self._scaled = self.metric.scale(self.X)
        self._tree = cKDTree(self._scaled) if len(self.U) > BRUTE_FORCE_LIMIT else None

    def __len__(self) -> int:
        return len(self.U)

    @property
    def t_range(self) -> tuple[float, float]:
        return float(self.X[:, 2].min()), float(self.X[:, 2].max())

    def _order(self, cand: np.ndarray, d2: np.ndarray) -> np.ndarray:
        X = self.X[cand]
        keys = (cand, X[:, 1], X[:, 0], X[:, 2], d2)
        return cand[np.lexsort(keys)]

    def nearest(self, x, k: int) -> tuple[np.ndarray, bool]:
        """Indices of the ``k`` nearest samples (sorted) and an undersized flag."""
        q = self.metric.scale(x)
        n = len(self.U)
        if k >= n:
            d2 = ((self._scaled - q) ** 2).sum(axis=1)
            return self._order(np.arange(n), d2), k > n
        if self._tree is None:
            d2 = ((self._scaled - q) ** 2).sum(axis=1)
            kth = np.partition(d2, k - 1)[k - 1]
            cand = np.flatnonzero(d2 <= kth)
            return self._order(cand, d2[cand])[:k], False
        dist, _ = self._tree.query(q, k=k)
        radius = float(np.max(dist)) * (1 + 1e-12) + 1e-300
        cand = np.array(sorted(self._tree.query_ball_point(q, radius)), dtype=int)
        d2 = ((self._scaled[cand] - q) ** 2).sum(axis=1)
        kth = np.partition(d2, k - 1)[k - 1]
        keep = d2 <= kth
        return self._order(cand[keep], d2[keep])[:k], False


@dataclass(frozen=True)
class NeighborSelection:
    indices: np.ndarray
    X: np.ndarray
    U: np.ndarray
    undersized: bool

    @property
    def samples(self) -> list[Sample]:
        return [Sample(SpatioTemporalPoint.from_array(x), float(u)) for x, u in zip(self.X, self.U)]


def select_neighbors(query, data, cfg: NeighborConfig | None = None) -> NeighborSelection:
    """Nearest samples to ``query`` under the scaled Euclidean metric.

    Ties are broken by ``(t, p1, p2, insertion index)``.  ``data`` is a
    sequence of snapshots or a prebuilt :class:`SampleIndex`.
    """
    cfg = cfg or NeighborConfig()
    index = data if isinstance(data, SampleIndex) else SampleIndex(data, cfg.metric)
    x = query.as_array() if isinstance(query, SpatioTemporalPoint) else np.asarray(query, float)
    idx, undersized = index.nearest(x, cfg.k)
    return NeighborSelection(idx, index.X[idx], index.U[idx], undersized)
