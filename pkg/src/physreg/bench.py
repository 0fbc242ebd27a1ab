"""Interpolation and forecast experiments on the reaction-diffusion benchmark."""
from __future__ import annotations

import csv
import json
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .io import config_hash
from .neighbors import SampleIndex
from .physics import PdeModel
from .points import Snapshot
from .predictor import PredictorConfig, predict_points
from .qp import OPTIMAL
from .simulator import GroundTruth, restrict

EPS_L2 = 1e-6
DEGRADED_LIMIT = 0.01


def l2_relative_error(pred: Snapshot, truth: Snapshot) -> float:
    """``sqrt(sum (pred - truth)^2 / (sum truth^2 + 1e-6))`` over shared nodes."""
    if not pred.same_nodes(truth):
        raise ValueError("prediction and truth are on different node sets")
    d = np.asarray(pred.u) - np.asarray(truth.u)
    return float(np.sqrt((d @ d) / (truth.u @ truth.u + EPS_L2)))


@dataclass
class ErrorCurve:
    k_prime: list[int]
    t: list[float]
    error: list[float]
    k_start: int | None = None
    degraded: list[float] = field(default_factory=list)

    def __post_init__(self):
        if any(e < 0 for e in self.error):
            raise ValueError("negative error")

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.k_prime, self.error))

    @property
    def median(self) -> float:
        return float(np.median(self.error))


@dataclass
class TimingReport:
    pre_training: float
    per_query_mean_ms: float
    per_query_median_ms: float
    per_query_p95_ms: float
    k: int
    query_count: int

    @classmethod
    def from_times(cls, seconds, k: int) -> "TimingReport":
        ms = np.asarray(seconds, float) * 1e3
        if ms.size < 100:
            warnings.warn(f"timing statistics from only {ms.size} queries", stacklevel=2)
        # the method has no fitting stage; nothing runs before the first query
        return cls(0.0, float(ms.mean()), float(np.median(ms)), float(np.percentile(ms, 95)),
                   k, int(ms.size))


@dataclass(frozen=True)
class BenchConfig:
    """Which truth nodes are scored.

    ``score_nodes=None`` scores the full truth lattice.  An integer draws that
    many distinct nodes per snapshot, independently for every snapshot index
    from ``(seed, k')``.  Independent draws keep the median over snapshots
    stable: the error is concentrated on few nodes, so one shared subset
    shifts every snapshot's estimate the same way.
    """

    score_nodes: int | None = None
    seed: int = 0
    workers: int = 1
    k_primes: tuple[int, ...] | None = None


@dataclass
class BenchResult:
    curves: list[ErrorCurve]
    timing: TimingReport
    degraded_fraction: float
    statuses: dict[str, int]
    kkt_max: float = 0.0  # worst KKT residual over queries reported optimal

    @property
    def valid(self) -> bool:
        return self.degraded_fraction <= DEGRADED_LIMIT

    @property
    def curve(self) -> ErrorCurve:
        return self.curves[0]


def scoring_nodes(truth: GroundTruth, n: int | None, seed: int = 0, k_prime: int = 0) -> np.ndarray:
    """Sorted flat node indices scored at snapshot ``k_prime``."""
    total = len(truth.nodes)
    if n is None or n >= total:
        return np.arange(total)
    rng = np.random.default_rng([seed, k_prime])
    return np.sort(rng.choice(total, size=n, replace=False))


def _score(truth: GroundTruth, data, k_primes, pde, cfg, bench, k_start=None):
    index = SampleIndex(data, cfg.neighbors.metric)
    errors, times, degraded, statuses, n_bad, kkt = [], [], [], {}, 0, 0.0
    for kp in k_primes:
        nodes = scoring_nodes(truth, bench.score_nodes, bench.seed, kp)
        ref = truth.snapshots[kp]
        target = Snapshot(kp, ref.t, ref.p[nodes], ref.u[nodes])
        gp = predict_points(target.p, target.t, index, pde, cfg, bench.workers, k_index=kp,
                            keep_records=True)
        errors.append(l2_relative_error(gp.snapshot, target))
        times.append(gp.wall_times)
        degraded.append(gp.degraded_fraction)
        n_bad += int(gp.degraded.sum())
        for s in gp.status:
            statuses[s] = statuses.get(s, 0) + 1
        kkt = max([kkt] + [max(r["kkt_stationarity"], r["kkt_feasibility"], r["kkt_complementarity"])
                           for r in gp.records if r["status"] == OPTIMAL])
    curve = ErrorCurve(list(k_primes), [truth.snapshots[k].t for k in k_primes], errors,
                       k_start, degraded)
    return curve, np.concatenate(times) if times else np.zeros(0), statuses, n_bad, kkt


def run_interpolation(truth: GroundTruth, data: Sequence[Snapshot], pde: PdeModel | None,
                      cfg: PredictorConfig | None = None, bench: BenchConfig | None = None) -> BenchResult:
    """Predict every snapshot ``1..K`` with all training snapshots available."""
    cfg = cfg or PredictorConfig()
    bench = bench or BenchConfig()
    k_primes = bench.k_primes or tuple(range(1, truth.K + 1))
    curve, times, statuses, n_bad, kkt = _score(truth, data, k_primes, pde, cfg, bench)
    deg = n_bad / len(times) if len(times) else 0.0
    return BenchResult([curve], TimingReport.from_times(times, cfg.neighbors.k), deg, statuses, kkt)


def run_forecast(truth: GroundTruth, data: Sequence[Snapshot], k_starts: Sequence[int],
                 pde: PdeModel | None, cfg: PredictorConfig | None = None,
                 bench: BenchConfig | None = None, horizon: int | None = None) -> BenchResult:
    """For each start index ``k``, give snapshots ``0..k`` and predict ``k+1..K``."""
    cfg = cfg or PredictorConfig()
    bench = bench or BenchConfig()
    curves, all_times, statuses, n_bad, kkt = [], [], {}, 0, 0.0
    for ks in k_starts:
        if not 0 <= ks < truth.K:
            raise ValueError(f"start index {ks} outside 0..{truth.K - 1}")
        last = truth.K if horizon is None else min(truth.K, ks + horizon)
        curve, times, st, bad, kk = _score(truth, restrict(data, ks), range(ks + 1, last + 1), pde, cfg,
                                      bench, k_start=ks)
        curves.append(curve)
        all_times.append(times)
        n_bad += bad
        kkt = max(kkt, kk)
        for s, c in st.items():
            statuses[s] = statuses.get(s, 0) + c
    times = np.concatenate(all_times)
    deg = n_bad / len(times) if len(times) else 0.0
    return BenchResult(curves, TimingReport.from_times(times, cfg.neighbors.k), float(deg), statuses, kkt)


def forecast_surface(curves: Sequence[ErrorCurve]) -> dict[tuple[int, int], float]:
    """Map ``(k_start, horizon) -> error``."""
    out = {}
    for c in curves:
        for kp, e in zip(c.k_prime, c.error):
            out[(c.k_start, kp - c.k_start)] = e
    return out


def smoother_ic_fraction(curves: Sequence[ErrorCurve]) -> float:
    """Share of comparable cells where a later start has error <= an earlier one
    at the same horizon."""
    surf = forecast_surface(curves)
    starts = sorted({k for k, _ in surf})
    wins = total = 0
    for i, a in enumerate(starts):
        for b in starts[i + 1:]:
            for (k, hz), e in surf.items():
                if k == a and (b, hz) in surf:
                    total += 1
                    wins += surf[(b, hz)] <= e
    return wins / total if total else float("nan")


def horizon_monotone_fraction(curves: Sequence[ErrorCurve]) -> float:
    """Share of adjacent horizon pairs with non-decreasing error."""
    ups = total = 0
    for c in curves:
        e = np.asarray(c.error)
        total += max(len(e) - 1, 0)
        ups += int(np.sum(np.diff(e) >= 0))
    return ups / total if total else float("nan")


def write_results(run_dir, config: dict, interp: BenchResult | None = None,
                  forecast: BenchResult | None = None) -> Path:
    """``config.json``, ``errors_interp.csv``, ``errors_forecast.csv``, ``timing.json``."""
    d = Path(run_dir)
    d.mkdir(parents=True, exist_ok=True)
    cfg = {**config, "config_hash": config_hash(config)}
    (d / "config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    timing = {}
    if interp is not None:
        with open(d / "errors_interp.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k_prime", "t", "error"])
            c = interp.curve
            for row in zip(c.k_prime, c.t, c.error):
                w.writerow([row[0], format(row[1], ".17g"), format(row[2], ".17g")])
        timing["interp"] = {**asdict(interp.timing), "degraded_fraction": interp.degraded_fraction,
                            "valid": interp.valid, "statuses": interp.statuses,
                            "kkt_max_optimal": interp.kkt_max}
    if forecast is not None:
        with open(d / "errors_forecast.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k_prime", "t", "error", "k_start"])
            for c in forecast.curves:
                for kp, t, e in zip(c.k_prime, c.t, c.error):
                    w.writerow([kp, format(t, ".17g"), format(e, ".17g"), c.k_start])
        timing["forecast"] = {**asdict(forecast.timing), "degraded_fraction": forecast.degraded_fraction,
                              "valid": forecast.valid, "statuses": forecast.statuses,
                              "kkt_max_optimal": forecast.kkt_max}
    timing["config_hash"] = cfg["config_hash"]
    (d / "timing.json").write_text(json.dumps(timing, indent=2, sort_keys=True) + "\n")
    return d
