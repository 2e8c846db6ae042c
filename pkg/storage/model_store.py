"""Versioned single-file container for PotentialModel parameters"""

import json
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
from loguru import logger

from networks import NetworkConfig, PotentialModel

MODEL_FORMAT = "vqsbi-model"
MODEL_VERSION = 1
META_KEY = "__meta__"


class ModelFormatError(ValueError):
    """File is not a readable model container"""


def save_model(model: PotentialModel, path: Union[str, Path], simulator: Optional[Dict[str, Any]] = None) -> Path:
    """Write architecture metadata and every parameter tensor in declared order.

    ``simulator`` ({"kind": ..., "params": ...}) is stored so observed data can be
    interpreted without the training config.
    """
    path = Path(path)
    params = model.parameters()
    meta = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "network": model.config.model_dump(),
        "running_mean": model.features.running_mean.tolist(),
        "parameters": [p.name for p in params],
        "simulator": simulator,
    }
    arrays = {p.name: p.value for p in params}
    arrays[META_KEY] = np.array(json.dumps(meta, sort_keys=True))
    with path.open("wb") as handle:
        np.savez(handle, **arrays)
    logger.info(f"Model saved to {path} ({len(params)} tensors)")
    return path


def load_model(path: Union[str, Path]) -> PotentialModel:
    """Rebuild a model in inference mode from :func:`save_model` output."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"model file {path} does not exist")
    with np.load(path, allow_pickle=False) as archive:
        if META_KEY not in archive:
            raise ModelFormatError(f"{path} has no metadata entry")
        meta = json.loads(str(archive[META_KEY]))
        if meta.get("format") != MODEL_FORMAT:
            raise ModelFormatError(f"{path} is not a {MODEL_FORMAT} file")
        if meta.get("version") != MODEL_VERSION:
            raise ModelFormatError(f"{path} has version {meta.get('version')}, expected {MODEL_VERSION}")
        model = PotentialModel(NetworkConfig(**meta["network"]), np.random.default_rng(0))
        params = model.parameters()
        names = [p.name for p in params]
        if names != meta["parameters"]:
            raise ModelFormatError(f"{path}: parameter list does not match the declared architecture")
        for p in params:
            value = archive[p.name]
            if value.shape != p.value.shape:
                raise ModelFormatError(f"{path}: tensor '{p.name}' has shape {value.shape}, expected {p.value.shape}")
            p.value = value.astype(np.float64)
    model.features.running_mean = np.asarray(meta["running_mean"], dtype=np.float64)
    return model.eval()


def read_model_metadata(path: Union[str, Path]) -> Dict[str, Any]:
    """The metadata block of a model file, without building the model."""
    with np.load(Path(path), allow_pickle=False) as archive:
        if META_KEY not in archive:
            raise ModelFormatError(f"{path} has no metadata entry")
        return json.loads(str(archive[META_KEY]))
