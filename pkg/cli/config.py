"""Experiment configuration: YAML file validated by a versioned pydantic schema"""

from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from baselines import AutoRegConfig
from networks import NetworkConfig
from simulators import Simulator, make_simulator
from training import TrainConfig

SCHEMA_VERSION = 1

FULL_SCALE = {
    "network": {"icnn_width": 512},
    "training": {"epochs": 150, "iterations_per_epoch": 100, "batch_size": 128, "restarts": 10},
}

ORACLE_METRICS = ("mmd", "w2", "baseline_mmd")


class ConfigError(ValueError):
    """Invalid experiment configuration; ``fields`` lists the dotted paths at fault"""

    def __init__(self, message: str, fields: Optional[List[str]] = None):
        super().__init__(message)
        self.fields = fields or []


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ExperimentBlock(_Block):
    name: str
    seed: int
    output_dir: Optional[str] = None


class SimulatorBlock(_Block):
    kind: Literal["gaussian", "gaussian_mean", "brock_hommes"]
    params: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_params(self):
        try:
            make_simulator(self.kind, self.params)
        except ValidationError as exc:
            raise ValueError(f"invalid {self.kind} parameters: {exc.errors()[0]['msg']} at '{_dotted(exc.errors()[0]['loc'])}'")
        return self

    def build(self) -> Simulator:
        return make_simulator(self.kind, self.params)


class NetworkBlock(_Block):
    icnn_width: int = Field(default=64, ge=1)
    icnn_layers: int = Field(default=3, ge=1)
    features: Literal["deepset", "mlp", "manual", "mean", "identity", "none"] = "deepset"
    feature_width: int = Field(default=64, ge=1)
    q1: int = Field(default=2, ge=0)
    q2: int = Field(default=0, ge=0)
    centering_momentum: float = Field(default=0.9, ge=0.0, lt=1.0)

    def network_config(self, simulator: Simulator) -> NetworkConfig:
        return NetworkConfig(param_dim=simulator.param_dim, data_dim=simulator.data_dim,
                             n_obs=simulator.n_obs, **self.model_dump())


class TrainingBlock(_Block):
    epochs: int = Field(default=30, ge=0)
    iterations_per_epoch: int = Field(default=100, ge=1)
    batch_size: int = Field(default=128, ge=2)
    restarts: int = Field(default=3, ge=1)
    learning_rate: float = Field(default=0.01, gt=0.0)
    lr_decay: float = Field(default=0.99, gt=0.0, le=1.0)
    held_out_factor: int = Field(default=10, ge=1)
    max_nonfinite: int = Field(default=10, ge=1)
    checkpoint_every: int = Field(default=0, ge=0)

    def train_config(self, seed: int, checkpoint_dir: Optional[Path] = None) -> TrainConfig:
        return TrainConfig(seed=seed, checkpoint_dir=checkpoint_dir, **self.model_dump())


class EvaluationBlock(_Block):
    metrics: List[Literal["mmd", "w2", "dtm", "coverage", "hull_area", "monotonicity", "convexity", "baseline_mmd"]] = ["mmd"]
    tau_levels: List[float] = [0.5, 0.6, 0.7, 0.8, 0.9]
    x_values: Optional[List[float]] = None
    theta_star: Optional[List[float]] = None
    n_samples: int = Field(default=2000, ge=2)
    n_test: int = Field(default=2000, ge=1)
    dtm_j: int = Field(default=100, ge=1)
    dtm_i: int = Field(default=300, ge=1)
    permutations: int = Field(default=200, ge=1)
    alpha: float = Field(default=0.05, gt=0.0, lt=1.0)
    diagnostic_pairs: int = Field(default=1000, ge=1)

    @field_validator("tau_levels")
    @classmethod
    def _increasing(cls, levels: List[float]) -> List[float]:
        if not levels:
            raise ValueError("at least one tau level is required")
        if any(not 0.0 < t < 1.0 for t in levels):
            raise ValueError(f"tau levels must lie in (0, 1), got {levels}")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError(f"tau levels must be strictly increasing, got {levels}")
        return levels


class ExperimentConfig(_Block):
    schema_version: Literal[1]
    experiment: ExperimentBlock
    simulator: SimulatorBlock
    network: NetworkBlock = Field(default_factory=NetworkBlock)
    training: TrainingBlock = Field(default_factory=TrainingBlock)
    evaluation: EvaluationBlock = Field(default_factory=EvaluationBlock)
    baseline: AutoRegConfig = Field(default_factory=AutoRegConfig)

    @property
    def seed(self) -> int:
        return self.experiment.seed


def _dotted(loc) -> str:
    return ".".join(str(part) for part in loc)


def parse_config(raw: Any, source: str = "config") -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: expected a mapping at the top level")
    try:
        return ExperimentConfig(**raw)
    except ValidationError as exc:
        fields = [_dotted(err["loc"]) for err in exc.errors()]
        details = "; ".join(f"'{_dotted(err['loc'])}': {err['msg']}" for err in exc.errors())
        raise ConfigError(f"{source}: invalid configuration: {details}", fields) from exc


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        with open(path, 'r') as f:
            raw = yaml.safe_load(f)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark is not None else ""
        raise ConfigError(f"{path}: YAML syntax error{where}: {getattr(exc, 'problem', exc)}") from exc
    return parse_config(raw, str(path))


def apply_full_scale(cfg: ExperimentConfig) -> ExperimentConfig:
    """Published network and training sizes in place of the desk-scale ones."""
    return cfg.model_copy(update={
        "network": cfg.network.model_copy(update=FULL_SCALE["network"]),
        "training": cfg.training.model_copy(update=FULL_SCALE["training"]),
    })


def with_seed(cfg: ExperimentConfig, seed: Optional[int]) -> ExperimentConfig:
    if seed is None:
        return cfg
    return cfg.model_copy(update={"experiment": cfg.experiment.model_copy(update={"seed": seed})})
