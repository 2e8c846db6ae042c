"""Shared fixtures: seeded generators, small networks and tiny experiment configs"""

import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from networks import NetworkConfig, PotentialModel, QuadraticPotential  # noqa: E402
from simulators import GaussianConjugateConfig, GaussianConjugateSimulator  # noqa: E402
from training import TrainConfig  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def repo_root() -> Path:
    return ROOT


@pytest.fixture
def small_network() -> NetworkConfig:
    return NetworkConfig(param_dim=2, data_dim=1, n_obs=3, icnn_width=6, icnn_layers=2,
                         features="deepset", feature_width=5, q1=2, q2=2)


@pytest.fixture
def small_model(small_network) -> PotentialModel:
    return PotentialModel(small_network, np.random.default_rng(7))


@pytest.fixture
def identity_model() -> QuadraticPotential:
    return QuadraticPotential(2)


@pytest.fixture
def gaussian_simulator() -> GaussianConjugateSimulator:
    return GaussianConjugateSimulator(GaussianConjugateConfig(n_obs=3))


@pytest.fixture
def tiny_train() -> TrainConfig:
    return TrainConfig(seed=11, epochs=2, iterations_per_epoch=3, batch_size=8, restarts=2, held_out_factor=2)


def zero_model(config: NetworkConfig) -> PotentialModel:
    """Every weight zero, so psi is identically zero."""
    model = PotentialModel(config, np.random.default_rng(0))
    for p in model.parameters():
        p.value = np.zeros_like(p.value)
    return model.eval()


def tiny_config(**overrides) -> dict:
    raw = {
        "schema_version": 1,
        "experiment": {"name": "tiny", "seed": 5},
        "simulator": {"kind": "gaussian", "params": {"n_obs": 2}},
        "network": {"icnn_width": 4, "icnn_layers": 2, "features": "deepset", "feature_width": 4, "q1": 2},
        "training": {"epochs": 2, "iterations_per_epoch": 2, "batch_size": 8, "restarts": 1, "held_out_factor": 2},
        "evaluation": {"metrics": ["mmd"], "tau_levels": [0.5, 0.9], "n_samples": 40, "n_test": 40,
                       "permutations": 10, "dtm_j": 3, "dtm_i": 5, "diagnostic_pairs": 20},
    }
    for block, values in overrides.items():
        if isinstance(values, dict) and isinstance(raw.get(block), dict):
            raw[block] = {**raw[block], **values}
        else:
            raw[block] = values
    return raw


@pytest.fixture
def write_config(tmp_path):
    def _write(raw: dict, name: str = "config.yaml") -> Path:
        path = tmp_path / name
        path.write_text(yaml.safe_dump(raw), encoding="utf-8")
        return path

    return _write
