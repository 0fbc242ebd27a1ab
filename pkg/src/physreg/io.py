"""CSV/JSON persistence for samples, ground truth, datasets and predictions."""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .physics import RdsParams
from .points import Sample, Snapshot
from .simulator import GroundTruth, SimConfig

SAMPLE_HEADER = ["p1", "p2", "t", "u"]
PREDICTION_HEADER = ["p1", "p2", "t", "u_pred", "u_true", "status"]


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def write_samples_csv(path, snapshots: Iterable[Snapshot]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SAMPLE_HEADER)
        for s in snapshots:
            tt = _fmt(s.t)
            for (a, b), u in zip(s.p, s.u):
                w.writerow([_fmt(a), _fmt(b), tt, _fmt(u)])


def read_samples_csv(path) -> list[Snapshot]:
    """Samples grouped into snapshots by time; ``k`` is the time rank."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != SAMPLE_HEADER:
            raise ValueError(f"{path}: expected header {SAMPLE_HEADER}, got {header}")
        rows = np.array([[float(v) for v in row] for row in r if row], dtype=float).reshape(-1, 4)
    out = []
    for k, t in enumerate(np.unique(rows[:, 2])):
        sel = rows[:, 2] == t
        out.append(Snapshot(k, float(t), rows[sel, :2], rows[sel, 3]))
    return out


def write_samples(path, samples: Sequence[Sample]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SAMPLE_HEADER)
        for s in samples:
            w.writerow([_fmt(s.point.p1), _fmt(s.point.p2), _fmt(s.point.t), _fmt(s.u)])


def save_truth(truth: GroundTruth, directory) -> Path:
    """One CSV per snapshot plus ``manifest.json`` with checksums."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    entries = []
    for s in truth.snapshots:
        name = f"snapshot_{s.k:04d}.csv"
        write_samples_csv(d / name, [s])
        entries.append({"k": s.k, "t": s.t, "file": name, "sha256": sha256_file(d / name)})
    meta = {"sim": truth.config.to_dict(), "params": truth.params.to_dict()}
    manifest = {**meta, "config_hash": config_hash(meta), "snapshots": entries}
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return d


def load_truth(directory, verify: bool = True) -> GroundTruth:
    d = Path(directory)
    manifest = json.loads((d / "manifest.json").read_text())
    cfg = SimConfig.from_dict(manifest["sim"])
    params = RdsParams(**manifest["params"])
    n = cfg.grid_n
    fields = []
    for e in manifest["snapshots"]:
        path = d / e["file"]
        if verify and sha256_file(path) != e["sha256"]:
            raise ValueError(f"checksum mismatch for {path}")
        (snap,) = read_samples_csv(path)
        fields.append(np.asarray(snap.u).reshape(n, n))
    truth = GroundTruth(cfg, params, np.array(fields))
    if not np.array_equal(truth.nodes, read_samples_csv(d / manifest["snapshots"][0]["file"])[0].p):
        raise ValueError("truth node layout does not match its configuration")
    return truth


def save_dataset(snapshots: Sequence[Snapshot], directory, meta: dict) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_samples_csv(d / "samples.csv", snapshots)
    manifest = {**meta, "samples_sha256": sha256_file(d / "samples.csv"),
                "n_snapshots": len(snapshots), "config_hash": config_hash(meta)}
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return d


def load_dataset(directory) -> tuple[list[Snapshot], dict]:
    d = Path(directory)
    manifest = json.loads((d / "manifest.json").read_text())
    return read_samples_csv(d / "samples.csv"), manifest


def write_predictions(path, P, t, u_pred, status, u_true=None, sidecar: dict | None = None) -> None:
    """Batch prediction CSV and, if given, a JSON sidecar next to it."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PREDICTION_HEADER)
        for i, (a, b) in enumerate(np.asarray(P).reshape(-1, 2)):
            ut = "" if u_true is None else _fmt(u_true[i])
            w.writerow([_fmt(a), _fmt(b), _fmt(t), _fmt(u_pred[i]), ut, status[i]])
    if sidecar is not None:
        path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def write_jsonl(path, records: Iterable[dict]) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(r, sort_keys=True) + "\n")
