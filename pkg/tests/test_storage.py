import json

import numpy as np
import pandas as pd
import pytest

from storage import (
    ModelFormatError,
    append_jsonl,
    config_hash,
    init_output_dir,
    load_model,
    output_root,
    read_jsonl,
    read_model_metadata,
    read_points_csv,
    save_model,
    write_manifest,
    write_matrix_csv,
    write_points_csv,
)
from storage.model_store import META_KEY

X = np.array([[0.1, 0.7, -0.3]])


def test_model_round_trip_preserves_the_quantile_map(small_model, tmp_path, rng):
    small_model.features.running_mean = np.array([0.1, -0.2, 0.3, 0.05])
    small_model.eval()
    path = save_model(small_model, tmp_path / "model.npz", simulator={"kind": "gaussian", "params": {"n_obs": 3}})
    loaded = load_model(path)
    assert not loaded.training
    u = rng.uniform(-0.5, 0.5, size=(10, 2))
    np.testing.assert_array_equal(loaded.grad_u(u, X), small_model.grad_u(u, X))
    np.testing.assert_array_equal(loaded.features.running_mean, small_model.features.running_mean)
    meta = read_model_metadata(path)
    assert meta["simulator"] == {"kind": "gaussian", "params": {"n_obs": 3}}
    assert meta["parameters"] == [p.name for p in small_model.parameters()]


def test_load_rejects_foreign_files(tmp_path):
    bare = tmp_path / "bare.npz"
    np.savez(bare, weights=np.zeros(3))
    with pytest.raises(ModelFormatError, match="no metadata"):
        load_model(bare)
    foreign = tmp_path / "foreign.npz"
    np.savez(foreign, **{META_KEY: np.array(json.dumps({"format": "other", "version": 1}))})
    with pytest.raises(ModelFormatError, match="is not a"):
        load_model(foreign)
    with pytest.raises(FileNotFoundError):
        load_model(tmp_path / "missing.npz")


def test_load_rejects_a_newer_version(small_model, tmp_path):
    path = save_model(small_model, tmp_path / "model.npz")
    with np.load(path) as archive:
        arrays = {name: archive[name] for name in archive.files}
    meta = json.loads(str(arrays[META_KEY]))
    meta["version"] = 2
    arrays[META_KEY] = np.array(json.dumps(meta))
    np.savez(tmp_path / "v2.npz", **arrays)
    with pytest.raises(ModelFormatError, match="version 2"):
        load_model(tmp_path / "v2.npz")


def test_points_csv(tmp_path):
    points = np.array([[0.5, 1.25], [-1.0, 2.0]])
    path = write_points_csv(points, tmp_path / "samples.csv")
    assert list(pd.read_csv(path).columns) == ["theta_1", "theta_2"]
    np.testing.assert_array_equal(read_points_csv(path), points)


def test_matrix_csv_has_no_header(tmp_path):
    path = write_matrix_csv(np.array([1.5, 2.5, 3.5]), tmp_path / "observation.csv")
    assert path.read_text(encoding="utf-8") == "1.5,2.5,3.5\n"


def test_manifest_records_hash_and_outputs(tmp_path):
    config = {"experiment": {"name": "tiny", "seed": 5}}
    path = write_manifest(tmp_path, "train", config, 5, [tmp_path / "model.npz", tmp_path / "a.csv"])
    manifest = json.loads(path.read_text(encoding="utf-8"))
    assert manifest["command"] == "train"
    assert manifest["config_sha256"] == config_hash(config)
    assert manifest["outputs"] == ["a.csv", "model.npz"]
    assert "numpy" in manifest["versions"]
    assert config_hash({"b": 1, "a": 2}) == config_hash({"a": 2, "b": 1})


def test_output_root_follows_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("VQSBI_OUTPUT_ROOT", str(tmp_path / "root"))
    assert output_root() == tmp_path / "root"
    assert init_output_dir(name="exp").is_dir()
    assert (tmp_path / "root" / "exp").is_dir()
    monkeypatch.delenv("VQSBI_OUTPUT_ROOT")
    assert str(output_root()) == "runs"
    with pytest.raises(ValueError):
        init_output_dir()


def test_jsonl_appends_records(tmp_path):
    path = tmp_path / "metrics.jsonl"
    append_jsonl([{"metric": "mmd", "value": np.float64(0.25)}], path)
    append_jsonl([{"metric": "w2", "value": np.array([0.1, 0.2])}], path)
    assert read_jsonl(path) == [{"metric": "mmd", "value": 0.25}, {"metric": "w2", "value": [0.1, 0.2]}]
