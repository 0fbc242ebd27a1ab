"""Finite-difference reference solutions of the reaction-diffusion benchmark
and the GRID / RAND training sets drawn from them."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .physics import RdsParams
from .points import Snapshot

DEFAULT_PEAKS = (
    ((2.5, 2.5), 40.0, 0.6),
    ((7.0, 3.5), 30.0, 0.6),
    ((4.0, 7.5), 35.0, 0.6),
)


class SimulationError(RuntimeError):
    pass


def stable_dt(h: float, params: RdsParams) -> float:
    return h * h / (4.0 * params.nu + h * math.hypot(*params.w))


@dataclass(frozen=True)
class SimConfig:
    grid_n: int = 120
    domain: tuple[float, float, float, float] = (0.0, 10.0, 0.0, 10.0)
    dt_sim: float | None = None  # None: largest step dividing snapshot_dt within 0.9x the bound
    snapshot_dt: float = 0.1
    K: int = 25
    peaks: tuple = DEFAULT_PEAKS
    uniform_ic: float | None = None

    def __post_init__(self):
        if self.grid_n < 3:
            raise ValueError("grid_n must be at least 3")
        object.__setattr__(self, "domain", tuple(float(v) for v in self.domain))
        object.__setattr__(self, "peaks", tuple(
            (tuple(float(c) for c in ctr), float(a), float(s)) for ctr, a, s in self.peaks))

    @property
    def h(self) -> tuple[float, float]:
        x0, x1, y0, y1 = self.domain
        return (x1 - x0) / (self.grid_n - 1), (y1 - y0) / (self.grid_n - 1)

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        x0, x1, y0, y1 = self.domain
        return np.linspace(x0, x1, self.grid_n), np.linspace(y0, y1, self.grid_n)

    def step_size(self, params: RdsParams) -> tuple[float, int]:
        """Time step and steps per snapshot; raises if the step is unstable."""
        bound = stable_dt(min(self.h), params)
        if self.dt_sim is None:
            n = max(1, math.ceil(self.snapshot_dt / (0.9 * bound)))
            return self.snapshot_dt / n, n
        if self.dt_sim > bound:
            raise ValueError(f"dt_sim={self.dt_sim} exceeds the stability bound {bound:.4g}")
        n = round(self.snapshot_dt / self.dt_sim)
        if n < 1 or not math.isclose(n * self.dt_sim, self.snapshot_dt, rel_tol=1e-9):
            raise ValueError("dt_sim must divide snapshot_dt")
        return self.dt_sim, n

    def initial_condition(self) -> np.ndarray:
        a, b = np.meshgrid(*self.axes(), indexing="ij")
        if self.uniform_ic is not None:
            return np.full(a.shape, float(self.uniform_ic))
        u = np.zeros(a.shape)
        for (c1, c2), amp, width in self.peaks:
            u += amp * np.exp(-((a - c1) ** 2 + (b - c2) ** 2) / (2 * width ** 2))
        return u

    def to_dict(self) -> dict:
        return {
            "grid_n": self.grid_n, "domain": list(self.domain), "dt_sim": self.dt_sim,
            "snapshot_dt": self.snapshot_dt, "K": self.K,
            "peaks": [[list(c), a, s] for c, a, s in self.peaks], "uniform_ic": self.uniform_ic,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        d = dict(d)
        if "peaks" in d:
            d["peaks"] = tuple((tuple(c), a, s) for c, a, s in d["peaks"])
        if "domain" in d:
            d["domain"] = tuple(d["domain"])
        return cls(**d)


@dataclass
class GroundTruth:
    config: SimConfig
    params: RdsParams
    fields: np.ndarray  # (K + 1, n, n), axis 1 is p1
    snapshots: list[Snapshot] = field(init=False)

    def __post_init__(self):
        a, b = np.meshgrid(*self.config.axes(), indexing="ij")
        nodes = np.column_stack([a.ravel(), b.ravel()])
        self.nodes = nodes
        self.snapshots = [
            Snapshot(k, snapshot_time(k, self.config.snapshot_dt), nodes, f.ravel())
            for k, f in enumerate(self.fields)
        ]

    @property
    def K(self) -> int:
        return len(self.fields) - 1

    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])


def snapshot_time(k: int, dt: float = 0.1) -> float:
    # k * 0.1 rather than repeated addition so times are exactly 0.1 k
    return k * dt


def _rhs(u, params: RdsParams, hx: float, hy: float) -> np.ndarray:
    # homogeneous Neumann via mirrored ghost nodes
    g = np.pad(u, 1, mode="reflect")
    c = g[1:-1, 1:-1]
    e, w_ = g[2:, 1:-1], g[:-2, 1:-1]
    n_, s_ = g[1:-1, 2:], g[1:-1, :-2]
    lap = (e - 2 * c + w_) / hx ** 2 + (n_ - 2 * c + s_) / hy ** 2
    w1, w2 = params.w
    adv = w1 * (e - w_) / (2 * hx) + w2 * (n_ - s_) / (2 * hy)
    return params.nu * lap + params.alpha * u - params.beta * u * u + adv


def rk4_step(u, dt, params, hx, hy):
    k1 = _rhs(u, params, hx, hy)
    k2 = _rhs(u + 0.5 * dt * k1, params, hx, hy)
    k3 = _rhs(u + 0.5 * dt * k2, params, hx, hy)
    k4 = _rhs(u + dt * k3, params, hx, hy)
    return u + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def simulate(cfg: SimConfig | None = None, params: RdsParams | None = None) -> GroundTruth:
    """Second-order central differences in space, classical RK4 in time."""
    cfg = cfg or SimConfig()
    params = params or RdsParams()
    dt, per_snap = cfg.step_size(params)
    hx, hy = cfg.h
    u = cfg.initial_condition()
    out = [u.copy()]
    step = 0
    for _ in range(cfg.K):
        for _ in range(per_snap):
            u = rk4_step(u, dt, params, hx, hy)
            step += 1
            if not np.all(np.isfinite(u)):
                raise SimulationError(f"non-finite state at step {step}")
        out.append(u.copy())
    return GroundTruth(cfg, params, np.array(out))


def grid_indices(n: int, m: int) -> np.ndarray:
    if m > n:
        raise ValueError(f"cannot take a {m}x{m} grid from {n} nodes per axis")
    if m < 2:
        raise ValueError("grid resolution must be at least 2")
    idx = np.round(np.linspace(0, n - 1, m)).astype(int)
    if (n - 1) % (m - 1):
        warnings.warn(f"{m} nodes do not divide a {n}-node axis evenly; using nearest nodes",
                      stacklevel=3)
    return idx


def sample_grid(truth: GroundTruth, m: int) -> list[Snapshot]:
    """m x m node subset of every snapshot; values copied, never resampled."""
    n = truth.config.grid_n
    idx = grid_indices(n, m)
    flat = (idx[:, None] * n + idx[None, :]).ravel()
    return [Snapshot(s.k, s.t, s.p[flat], s.u[flat]) for s in truth.snapshots]


def sample_random(truth: GroundTruth, n_per_snapshot: int, seed: int = 0) -> list[Snapshot]:
    """Uniform draws over the domain snapped to the nearest truth node.

    Draws landing on an already chosen node are redrawn, so every snapshot
    holds ``n_per_snapshot`` distinct nodes.
    """
    if n_per_snapshot < 1:
        raise ValueError("need at least one sample per snapshot")
    n = truth.config.grid_n
    if n_per_snapshot > n * n:
        raise ValueError("more samples requested than truth nodes")
    x0, x1, y0, y1 = truth.config.domain
    hx, hy = truth.config.h
    rng = np.random.default_rng(seed)
    out = []
    for s in truth.snapshots:
        chosen: dict[int, None] = {}
        while len(chosen) < n_per_snapshot:
            need = n_per_snapshot - len(chosen)
            pts = rng.uniform([x0, y0], [x1, y1], size=(need, 2))
            i = np.rint((pts[:, 0] - x0) / hx).astype(int)
            j = np.rint((pts[:, 1] - y0) / hy).astype(int)
            for f in i * n + j:
                if len(chosen) < n_per_snapshot:
                    chosen.setdefault(int(f), None)
        flat = np.fromiter(chosen, dtype=int)
        out.append(Snapshot(s.k, s.t, s.p[flat], s.u[flat]))
    return out


def logistic(t, u0: float, alpha: float, beta: float):
    e = np.exp(alpha * np.asarray(t, float))
    return alpha * u0 * e / (alpha + beta * u0 * (e - 1.0))


def restrict(snapshots: Sequence[Snapshot], k_max: int) -> list[Snapshot]:
    """Snapshots with index ``<= k_max`` (the forecast data regime)."""
    return [s for s in snapshots if s.k <= k_max]
