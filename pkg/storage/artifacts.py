"""Output directories, CSV/JSON writers and run manifests"""

import hashlib
import json
import os
import platform
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import numpy as np
import pandas as pd
from loguru import logger

DEFAULT_OUTPUT_ROOT = "runs"


def output_root() -> Path:
    root = os.getenv("VQSBI_OUTPUT_ROOT")
    if not root:
        root = DEFAULT_OUTPUT_ROOT
    return Path(root)


def init_output_dir(path: Optional[Union[str, Path]] = None, name: Optional[str] = None) -> Path:
    """Create the output directory; relative names resolve under ``VQSBI_OUTPUT_ROOT``."""
    if path is None:
        if name is None:
            raise ValueError("either an output path or an experiment name is required")
        path = output_root() / name
    path = Path(path)
    logger.info(f"Initializing output directory {path}...")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, tuple):
        return list(value)
    raise TypeError(f"cannot serialize {type(value).__name__} to JSON")


def dumps(payload: Any) -> str:
    """Canonical JSON: sorted keys, UTF-8 text, no locale dependence."""
    return json.dumps(payload, sort_keys=True, ensure_ascii=False, default=_jsonable, indent=2)


def write_json(payload: Any, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(dumps(payload) + "\n", encoding="utf-8")
    return path


def append_jsonl(records: Iterable[Dict[str, Any]], path: Union[str, Path]) -> Path:
    path = Path(path)
    with path.open("a", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, sort_keys=True, ensure_ascii=False, default=_jsonable) + "\n")
    return path


def read_jsonl(path: Union[str, Path]) -> List[Dict[str, Any]]:
    with Path(path).open(encoding="utf-8") as handle:
        return [json.loads(line) for line in handle if line.strip()]


def write_csv(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def write_points_csv(points: np.ndarray, path: Union[str, Path], prefix: str = "theta") -> Path:
    columns = [f"{prefix}_{k + 1}" for k in range(points.shape[1])]
    return write_csv(pd.DataFrame(points, columns=columns), path)


def write_matrix_csv(matrix: np.ndarray, path: Union[str, Path]) -> Path:
    """Bare matrix without header, readable back as an observation file."""
    path = Path(path)
    pd.DataFrame(np.atleast_2d(matrix)).to_csv(path, header=False, index=False, lineterminator="\n")
    return path


def read_points_csv(path: Union[str, Path]) -> np.ndarray:
    return pd.read_csv(path).to_numpy(dtype=np.float64)


def config_hash(config: Dict[str, Any]) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True, default=_jsonable).encode("utf-8")).hexdigest()


def package_versions() -> Dict[str, str]:
    import scipy

    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "pandas": pd.__version__,
        "scipy": scipy.__version__,
    }


def write_manifest(out_dir: Union[str, Path], command: str, config: Dict[str, Any], seed: int,
                   outputs: Iterable[Union[str, Path]], extra: Optional[Dict[str, Any]] = None) -> Path:
    """manifest.json: enough to re-run ``command`` with the same config and seed."""
    manifest = {
        "command": command,
        "config": config,
        "config_sha256": config_hash(config),
        "seed": seed,
        "versions": package_versions(),
        "outputs": sorted(Path(p).name for p in outputs),
    }
    if extra:
        manifest.update(extra)
    path = write_json(manifest, Path(out_dir) / "manifest.json")
    logger.success(f"Manifest written to {path}")
    return path
