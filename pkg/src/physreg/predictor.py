"""Pointwise prediction: neighbors -> constraints -> physics -> solve.

There is no fitting stage.  Every call works from the raw samples, so data
can be added or replaced between calls without any recomputation.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .constraints import DuplicatePointError, assemble_arrays
from .neighbors import NeighborConfig, SampleIndex
from .physics import PdeModel
from .points import EPS_G, EPS_Q, AxisScaling, FieldVars, Snapshot, SpatioTemporalPoint
from .qp import NUMERICAL_FAILURE, OPTIMAL, SolveReport
from .sqp import SolverConfig, slack_summary, solve_sqp


@dataclass(frozen=True)
class PredictorConfig:
    neighbors: NeighborConfig = field(default_factory=NeighborConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    scaling: AxisScaling = field(default_factory=AxisScaling)
    idw_power: float = 2.0
    init_slack: float = 1e-3
    domain: tuple[float, float, float, float] | None = None  # (x0, x1, y0, y1)

    def to_dict(self) -> dict:
        return {
            "k": self.neighbors.k,
            "metric": None if self.neighbors.metric is None else list(self.neighbors.metric.factors),
            "solver": self.solver.to_dict(),
            "scaling": list(self.scaling.factors),
            "idw_power": self.idw_power,
            "init_slack": self.init_slack,
            "domain": None if self.domain is None else list(self.domain),
        }


@dataclass
class PredictionResult:
    u_prime: float
    field_vars_query: FieldVars | None
    field_vars_neighbors: list[FieldVars]
    slack_summary: tuple[float, float]
    report: SolveReport | None
    neighbor_ids: np.ndarray
    degraded: bool = False
    undersized: bool = False
    wall_time: float = 0.0

    @property
    def status(self) -> str:
        return self.report.status if self.report is not None else NUMERICAL_FAILURE

    def to_record(self) -> dict:
        out = {"u_prime": self.u_prime, "status": self.status, "degraded": self.degraded,
               "undersized": self.undersized, "wall_time": self.wall_time,
               "eps_g_max": self.slack_summary[0], "eps_Q_max": self.slack_summary[1]}
        if self.field_vars_query is not None:
            out["g"] = self.field_vars_query.g.tolist()
            out["h"] = self.field_vars_query.h.tolist()
        if self.report is not None:
            out.update({k: v for k, v in self.report.summary().items() if k != "status"})
        return out


def idw(x, X, U, metric: AxisScaling, power: float = 2.0) -> float:
    d = np.linalg.norm(metric.scale(X) - metric.scale(x), axis=1)
    w = 1.0 / np.maximum(d, 1e-12) ** power
    return float(w @ U / w.sum())


def initial_theta(dim: int, k: int, u0: float, slack: float) -> np.ndarray:
    theta = np.zeros(dim)
    theta[0] = u0
    starts = 1 + 11 * np.arange(k + 1)
    theta[starts + EPS_G] = slack
    theta[starts + EPS_Q] = slack
    return theta


def _as_array(query) -> np.ndarray:
    if isinstance(query, SpatioTemporalPoint):
        return query.as_array()
    return np.asarray(query, dtype=float)


def predict(query, data, pde: PdeModel | None = None, cfg: PredictorConfig | None = None) -> PredictionResult:
    """Predict the state at ``query`` from ``data``.

    ``data`` is a sequence of snapshots or a :class:`SampleIndex`; ``pde``
    may be ``None`` (or ``cfg.solver.physics`` false) for pure Taylor
    regression.  On solver failure the value falls back to inverse-distance
    weighting and ``degraded`` is set.
    """
    t0 = time.perf_counter()
    cfg = cfg or PredictorConfig()
    index = data if isinstance(data, SampleIndex) else SampleIndex(data, cfg.neighbors.metric)
    x = _as_array(query)
    if cfg.domain is not None:
        x0, x1, y0, y1 = cfg.domain
        if not (x0 <= x[0] <= x1 and y0 <= x[1] <= y1):
            raise ValueError(f"query {x} outside domain {cfg.domain}")
    idx, undersized = index.nearest(x, cfg.neighbors.k)
    X, U = index.X[idx], index.U[idx]
    u_idw = idw(x, X, U, index.metric, cfg.idw_power)
    sc = cfg.scaling
    try:
        system = assemble_arrays(sc.scale(x), sc.scale(X), U)
    except DuplicatePointError:
        return PredictionResult(u_idw, None, [], (np.nan, np.nan), None, idx, True, undersized,
                                time.perf_counter() - t0)
    layout = system.layout
    theta0 = initial_theta(layout.dim, layout.k, u_idw, cfg.init_slack)
    rep = solve_sqp(system, pde, U, theta0, cfg.solver, sc)
    theta = rep.theta
    fv_q = FieldVars.from_block(theta[layout.query], sc)
    fv_n = [FieldVars.from_block(theta[layout.neighbor(i)], sc) for i in range(layout.k)]
    ok = rep.status == OPTIMAL and np.isfinite(theta[0])
    u = float(theta[0]) if ok else u_idw
    return PredictionResult(u, fv_q, fv_n, slack_summary(theta, layout), rep, idx,
                            not ok, undersized, time.perf_counter() - t0)


@dataclass
class GridPrediction:
    snapshot: Snapshot
    status: list[str]
    degraded: np.ndarray
    wall_times: np.ndarray
    records: list[dict] | None = None

    @property
    def degraded_fraction(self) -> float:
        return float(self.degraded.mean()) if self.degraded.size else 0.0


# worker-process state, set once per pool
_WORKER: dict = {}


def _init_worker(index, pde, cfg):
    _WORKER.update(index=index, pde=pde, cfg=cfg)


def _predict_chunk(points):
    out = []
    for x in points:
        r = predict(x, _WORKER["index"], _WORKER["pde"], _WORKER["cfg"])
        out.append((r.u_prime, r.status, r.degraded, r.wall_time, r.to_record()))
    return out


def predict_points(P, t: float, data, pde: PdeModel | None = None, cfg: PredictorConfig | None = None,
                   workers: int = 1, k_index: int = -1, keep_records: bool = False) -> GridPrediction:
    """Predict at spatial points ``P`` (n, 2) at time ``t``.

    Output order follows ``P`` and values do not depend on ``workers``.
    """
    cfg = cfg or PredictorConfig()
    index = data if isinstance(data, SampleIndex) else SampleIndex(data, cfg.neighbors.metric)
    P = np.asarray(P, dtype=float).reshape(-1, 2)
    pts = np.column_stack([P, np.full(len(P), float(t))])
    _init_worker(index, pde, cfg)
    if workers <= 1 or len(pts) < 2:
        rows = _predict_chunk(pts)
    else:
        chunks = np.array_split(pts, min(len(pts), workers * 8))
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(index, pde, cfg)) as ex:
            rows = [r for part in ex.map(_predict_chunk, chunks) for r in part]
    u = np.array([r[0] for r in rows])
    snap = Snapshot(k_index, float(t), P, u)
    return GridPrediction(
        snap, [r[1] for r in rows], np.array([r[2] for r in rows], dtype=bool),
        np.array([r[3] for r in rows]), [r[4] for r in rows] if keep_records else None,
    )


def lattice(m: int, domain=(0.0, 10.0, 0.0, 10.0)) -> np.ndarray:
    """m x m node coordinates, row-major with p1 varying slowest."""
    if m < 2:
        raise ValueError("lattice needs m >= 2")
    x0, x1, y0, y1 = domain
    a, b = np.meshgrid(np.linspace(x0, x1, m), np.linspace(y0, y1, m), indexing="ij")
    return np.column_stack([a.ravel(), b.ravel()])


def predict_grid(m: int, t_query: float, data, pde: PdeModel | None = None,
                 cfg: PredictorConfig | None = None, workers: int = 1,
                 domain: Sequence[float] | None = None) -> GridPrediction:
    cfg = cfg or PredictorConfig()
    domain = domain or cfg.domain or (0.0, 10.0, 0.0, 10.0)
    return predict_points(lattice(m, domain), t_query, data, pde, cfg, workers)
