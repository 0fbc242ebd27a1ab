"""Single-file run configuration shared by the command-line tools."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .io import config_hash
from .neighbors import NeighborConfig
from .physics import RdsParams
from .points import AxisScaling
from .predictor import PredictorConfig
from .simulator import SimConfig
from .sqp import SolverConfig

OUTPUT_ROOT_ENV = "PHYSREG_OUTPUT_ROOT"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    params: RdsParams = field(default_factory=RdsParams)
    k: int = 10
    metric: tuple[float, float, float] | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    scaling: tuple[float, float, float] = (1.0, 1.0, 1.0)
    seed: int = 0
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)
    score_nodes: int | None = None
    output_root: str = "."

    def predictor(self) -> PredictorConfig:
        metric = None if self.metric is None else AxisScaling(*self.metric)
        return PredictorConfig(
            neighbors=NeighborConfig(self.k, metric), solver=self.solver,
            scaling=AxisScaling(*self.scaling), domain=self.sim.domain,
        )

    def to_dict(self) -> dict:
        """Everything that affects results; worker count and paths excluded."""
        return {
            "sim": self.sim.to_dict(), "params": self.params.to_dict(), "k": self.k,
            "metric": None if self.metric is None else list(self.metric),
            "solver": self.solver.to_dict(), "scaling": list(self.scaling),
            "seed": self.seed, "score_nodes": self.score_nodes,
        }

    @property
    def hash(self) -> str:
        return config_hash(self.to_dict())

    @property
    def output_path(self) -> Path:
        return Path(os.environ.get(OUTPUT_ROOT_ENV) or self.output_root)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        allowed = {f.name for f in fields(cls)}
        unknown = set(d) - allowed
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        try:
            if "sim" in d:
                d["sim"] = SimConfig.from_dict(d["sim"])
            if "params" in d:
                d["params"] = RdsParams(**d["params"])
            if "solver" in d:
                d["solver"] = SolverConfig(**d["solver"])
            for key in ("metric", "scaling"):
                if d.get(key) is not None:
                    d[key] = tuple(float(v) for v in d[key])
            cfg = cls(**d)
            NeighborConfig(cfg.k)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc

    def save(self, path) -> None:
        d = {**self.to_dict(), "workers": self.workers, "output_root": self.output_root}
        Path(path).write_text(json.dumps(d, indent=2, sort_keys=True) + "\n")

    def override(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        sim = {k[4:]: kw.pop(k) for k in list(kw) if k.startswith("sim_")}
        cfg = replace(self, **kw)
        if sim:
            try:
                cfg = replace(cfg, sim=replace(cfg.sim, **sim))
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        return cfg
