import json

import numpy as np
import pytest

from physreg.io import (
    PREDICTION_HEADER,
    config_hash,
    load_dataset,
    load_truth,
    read_samples_csv,
    save_dataset,
    save_truth,
    sha256_file,
    write_jsonl,
    write_predictions,
    write_samples,
    write_samples_csv,
)
from physreg.points import Sample, Snapshot, SpatioTemporalPoint
from physreg.simulator import SimConfig, sample_random, simulate


@pytest.fixture(scope="module")
def small_truth():
    return simulate(SimConfig(grid_n=15, K=3))


class TestSamplesCsv:
    def test_roundtrip_is_bit_exact(self, tmp_path, rng):
        snaps = [Snapshot(k, 0.1 * k, rng.uniform(0, 10, (7, 2)), rng.normal(size=7) * 1e3)
                 for k in range(3)]
        write_samples_csv(tmp_path / "s.csv", snaps)
        back = read_samples_csv(tmp_path / "s.csv")
        for a, b in zip(snaps, back):
            assert a.t == b.t and a.k == b.k
            np.testing.assert_array_equal(a.p, b.p)
            np.testing.assert_array_equal(a.u, b.u)

    def test_single_samples(self, tmp_path):
        s = [Sample(SpatioTemporalPoint(0.1, 0.2, 0.3), 1 / 3)]
        write_samples(tmp_path / "x.csv", s)
        assert (tmp_path / "x.csv").read_text().splitlines()[0] == "p1,p2,t,u"
        (snap,) = read_samples_csv(tmp_path / "x.csv")
        assert snap.u[0] == 1 / 3

    def test_bad_header_rejected(self, tmp_path):
        (tmp_path / "bad.csv").write_text("x,y,t,u\n0,0,0,0\n")
        with pytest.raises(ValueError):
            read_samples_csv(tmp_path / "bad.csv")


class TestTruthAndDatasets:
    def test_truth_roundtrip(self, tmp_path, small_truth):
        save_truth(small_truth, tmp_path / "truth")
        back = load_truth(tmp_path / "truth")
        np.testing.assert_array_equal(back.fields, small_truth.fields)
        assert back.config == small_truth.config
        assert back.params == small_truth.params
        files = sorted(p.name for p in (tmp_path / "truth").iterdir())
        assert files == ["manifest.json"] + [f"snapshot_{k:04d}.csv" for k in range(4)]

    def test_checksum_mismatch_detected(self, tmp_path, small_truth):
        d = save_truth(small_truth, tmp_path / "truth")
        f = d / "snapshot_0002.csv"
        f.write_text(f.read_text().replace("\n0,", "\n0.0,", 1))
        with pytest.raises(ValueError, match="checksum"):
            load_truth(d)

    def test_resave_is_byte_identical(self, tmp_path, small_truth):
        a = save_truth(small_truth, tmp_path / "a")
        b = save_truth(small_truth, tmp_path / "b")
        for f in a.iterdir():
            assert f.read_bytes() == (b / f.name).read_bytes()

    def test_dataset_roundtrip(self, tmp_path, small_truth):
        snaps = sample_random(small_truth, 20, 4)
        save_dataset(snaps, tmp_path / "ds", {"kind": "rand", "seed": 4})
        back, meta = load_dataset(tmp_path / "ds")
        assert meta["kind"] == "rand"
        assert meta["samples_sha256"] == sha256_file(tmp_path / "ds" / "samples.csv")
        for a, b in zip(snaps, back):
            # rows come back in file order, which is the order written
            np.testing.assert_array_equal(a.p, b.p)
            np.testing.assert_array_equal(a.u, b.u)


class TestOutputs:
    def test_prediction_csv_and_sidecar(self, tmp_path):
        P = np.array([[0.0, 1.0], [2.0, 3.0]])
        write_predictions(tmp_path / "p.csv", P, 0.5, [1.5, 2.5], ["optimal", "max_iter"],
                          None, {"config_hash": "abc"})
        lines = (tmp_path / "p.csv").read_text().splitlines()
        assert lines[0] == ",".join(PREDICTION_HEADER)
        assert lines[1] == "0,1,0.5,1.5,,optimal"
        assert json.loads((tmp_path / "p.json").read_text()) == {"config_hash": "abc"}

    def test_prediction_csv_with_truth(self, tmp_path):
        write_predictions(tmp_path / "p.csv", [[1, 1]], 0.0, [1.0], ["optimal"], [0.25])
        assert (tmp_path / "p.csv").read_text().splitlines()[1] == "1,1,0,1,0.25,optimal"
        assert not (tmp_path / "p.json").exists()

    def test_jsonl(self, tmp_path):
        write_jsonl(tmp_path / "d.jsonl", [{"b": 1, "a": 2}, {"c": [1.5]}])
        lines = (tmp_path / "d.jsonl").read_text().splitlines()
        assert lines == ['{"a": 2, "b": 1}', '{"c": [1.5]}']

    def test_config_hash_ignores_key_order(self):
        assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
        assert config_hash({"a": 1}) != config_hash({"a": 2})
        assert len(config_hash({})) == 16
