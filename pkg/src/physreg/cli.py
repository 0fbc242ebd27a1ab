"""Command-line entry point: ``simulate``, ``make-dataset``, ``predict``, ``bench``.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import bench as B
from .config import ConfigError, RunConfig
from .io import (config_hash, load_dataset, load_truth, save_dataset, save_truth, write_jsonl,
                 write_predictions)
from .physics import rds_model
from .predictor import lattice, predict, predict_points
from .simulator import SimulationError, grid_indices, sample_grid, sample_random, simulate

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


class NumericalFailure(RuntimeError):
    pass


def parse_k_list(text: str) -> list[int]:
    """``"10"``, ``"5,10,15"`` or an inclusive range ``"5..20"``."""
    try:
        if ".." in text:
            a, b = text.split("..")
            return list(range(int(a), int(b) + 1))
        return [int(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad k specification {text!r}") from exc


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    over = {}
    if getattr(args, "workers", None) is not None:
        over["workers"] = args.workers
    if getattr(args, "seed", None) is not None:
        over["seed"] = args.seed
    if getattr(args, "grid_n", None) is not None:
        over["sim_grid_n"] = args.grid_n
    return cfg.override(**over)


def _out_dir(cfg: RunConfig, path: str) -> Path:
    p = Path(path)
    return p if p.is_absolute() else cfg.output_path / p


def _require(path: str, what: str) -> Path:
    p = Path(path)
    if not (p / "manifest.json").exists():
        raise ConfigError(f"{what} not found at {p}")
    return p


def cmd_simulate(args) -> int:
    cfg = _config(args)
    t0 = time.perf_counter()
    truth = simulate(cfg.sim, cfg.params)
    out = save_truth(truth, _out_dir(cfg, args.out))
    print(f"wrote {truth.K + 1} snapshots ({cfg.sim.grid_n}x{cfg.sim.grid_n}) to {out} "
          f"in {time.perf_counter() - t0:.2f} s")
    return EXIT_OK


def cmd_make_dataset(args) -> int:
    cfg = _config(args)
    truth = load_truth(_require(args.truth, "ground truth"))
    if args.kind == "grid":
        snaps = sample_grid(truth, args.size)
    else:
        snaps = sample_random(truth, args.size, cfg.seed)
    meta = {"kind": args.kind, "size": args.size, "seed": cfg.seed if args.kind == "rand" else None,
            "truth_config_hash": json.loads((Path(args.truth) / "manifest.json").read_text())["config_hash"]}
    out = save_dataset(snaps, _out_dir(cfg, args.out), meta)
    print(f"wrote {sum(len(s) for s in snaps)} samples ({len(snaps[0])} per snapshot) to {out}")
    return EXIT_OK


def _pde(cfg: RunConfig, physics: str):
    return rds_model(cfg.params) if physics == "on" else None


def cmd_predict(args) -> int:
    cfg = _config(args)
    data, _ = load_dataset(_require(args.data, "dataset"))
    pde = _pde(cfg, args.physics)
    ks = args.k or [cfg.k]
    if args.point is not None:
        if len(ks) > 1:
            raise ConfigError("a k sweep needs a grid query")
        pcfg = cfg.override(k=ks[0]).predictor()
        r = predict(args.point, data, pde, pcfg)
        rec = {**r.to_record(), "query": list(args.point), "k": ks[0], "config_hash": cfg.hash}
        print(json.dumps(rec, indent=2, sort_keys=True))
        if args.out:
            Path(args.out).write_text(json.dumps(rec, indent=2, sort_keys=True) + "\n")
        if r.degraded:
            raise NumericalFailure(f"solver status {r.status}; IDW fallback value reported")
        return EXIT_OK

    if args.grid is None or args.time is None:
        raise ConfigError("give --point P1 P2 T or --grid M --time T")
    truth = load_truth(_require(args.truth, "ground truth")) if args.truth else None
    if truth is not None:
        n = truth.config.grid_n
        if args.grid <= 0:
            sel = np.arange(n * n)
        else:
            idx = grid_indices(n, args.grid)
            sel = (idx[:, None] * n + idx[None, :]).ravel()
        P, u_true = truth.nodes[sel], None
        k_near = int(np.argmin(np.abs(truth.times() - args.time)))
        if abs(truth.times()[k_near] - args.time) < 1e-9:
            u_true = truth.snapshots[k_near].u[sel]
    else:
        P, u_true = lattice(args.grid, cfg.sim.domain), None

    table = []
    invalid = False
    for k in ks:
        pcfg = cfg.override(k=k).predictor()
        gp = predict_points(P, args.time, data, pde, pcfg, cfg.workers, keep_records=bool(args.diagnostics))
        err = None
        if u_true is not None:
            err = B.l2_relative_error(gp.snapshot, gp.snapshot.with_values(u_true))
        table.append({"k": k, "error": err, "degraded_fraction": gp.degraded_fraction,
                      "mean_ms": float(gp.wall_times.mean() * 1e3)})
        invalid |= gp.degraded_fraction > B.DEGRADED_LIMIT
        if args.out:
            out = Path(args.out)
            if len(ks) > 1:
                out = out.with_name(f"{out.stem}_k{k}{out.suffix}")
            side = {"config_hash": cfg.hash, "k": k, "physics": args.physics, "t": args.time,
                    "degraded_fraction": gp.degraded_fraction}
            write_predictions(out, P, args.time, gp.snapshot.u, gp.status, u_true, side)
        if args.diagnostics:
            d = Path(args.diagnostics)
            if len(ks) > 1:
                d = d.with_name(f"{d.stem}_k{k}{d.suffix}")
            write_jsonl(d, gp.records)
    print("k,error,degraded_fraction,mean_ms")
    for row in table:
        e = "" if row["error"] is None else f"{row['error']:.6g}"
        print(f"{row['k']},{e},{row['degraded_fraction']:.4g},{row['mean_ms']:.3g}")
    if invalid:
        raise NumericalFailure("more than 1% of nodes fell back to IDW")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _config(args)
    if args.score_nodes is not None:
        cfg = cfg.override(score_nodes=args.score_nodes)
    if args.k is not None:
        cfg = cfg.override(k=args.k)
    truth = load_truth(_require(args.truth, "ground truth"))
    data, meta = load_dataset(_require(args.data, "dataset"))
    pde = _pde(cfg, args.physics)
    bcfg = B.BenchConfig(cfg.score_nodes, cfg.seed, cfg.workers)
    pcfg = cfg.predictor()
    record = {**cfg.to_dict(), "mode": args.mode, "physics": args.physics, "dataset": meta}
    run_id = args.run_id or f"{args.mode}-{config_hash(record)[:8]}"
    interp = forecast = None
    if args.mode == "interp":
        interp = B.run_interpolation(truth, data, pde, pcfg, bcfg)
        res = interp
        for kp, e in zip(interp.curve.k_prime, interp.curve.error):
            print(f"k'={kp:3d}  error={e:.5g}")
        print(f"median error {interp.curve.median:.5g}")
    else:
        k_starts = args.k_start or list(range(0, truth.K))
        record["k_start"] = k_starts
        forecast = B.run_forecast(truth, data, k_starts, pde, pcfg, bcfg)
        res = forecast
        for c in forecast.curves:
            print(f"k_start={c.k_start:3d}  " + " ".join(f"{e:.3g}" for e in c.error))
    out = B.write_results(_out_dir(cfg, Path("results") / run_id), record, interp, forecast)
    t = res.timing
    print(f"per-query {t.per_query_mean_ms:.2f} ms mean over {t.query_count} queries; "
          f"pre-training {t.pre_training:g} s; results in {out}")
    if not res.valid:
        raise NumericalFailure(f"{res.degraded_fraction:.2%} of nodes degraded; run flagged invalid")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="physreg", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, workers=False, seed=False):
        p.add_argument("--config", help="JSON run configuration")
        if workers:
            p.add_argument("--workers", type=int, help="worker processes (default: logical cores)")
        if seed:
            p.add_argument("--seed", type=int)

    p = sub.add_parser("simulate", help="finite-difference ground truth")
    common(p)
    p.add_argument("--grid-n", type=int, help="truth nodes per axis")
    p.add_argument("--out", default="truth")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("make-dataset", help="GRID or RAND training set from a ground truth")
    common(p, seed=True)
    p.add_argument("--truth", default="truth")
    p.add_argument("kind", choices=["grid", "rand"])
    p.add_argument("size", type=int, help="nodes per axis (grid) or samples per snapshot (rand)")
    p.add_argument("--out", default="dataset")
    p.set_defaults(func=cmd_make_dataset)

    p = sub.add_parser("predict", help="predict at a point or over a lattice")
    common(p, workers=True)
    p.add_argument("--data", default="dataset")
    p.add_argument("--point", type=float, nargs=3, metavar=("P1", "P2", "T"))
    p.add_argument("--grid", type=int, help="lattice size m (0 with --truth: every truth node)")
    p.add_argument("--time", type=float)
    p.add_argument("--truth", help="score against this ground truth")
    p.add_argument("--physics", choices=["on", "off"], default="on")
    p.add_argument("--k", type=parse_k_list, help="neighbor count, list or range such as 5..20")
    p.add_argument("--out", help="CSV (grid) or JSON (point) output")
    p.add_argument("--diagnostics", help="per-query JSONL diagnostics")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("bench", help="interpolation or forecast benchmark")
    common(p, workers=True, seed=True)
    p.add_argument("--truth", default="truth")
    p.add_argument("--data", default="dataset")
    p.add_argument("mode", choices=["interp", "forecast"])
    p.add_argument("--k-start", type=parse_k_list)
    p.add_argument("--k", type=int)
    p.add_argument("--physics", choices=["on", "off"], default="on")
    p.add_argument("--score-nodes", type=int, help="score a seeded subset of truth nodes")
    p.add_argument("--run-id")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationError, NumericalFailure, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
