"""Shared simulator interface, training batches and CSV export"""

from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from .source import sample_source


@dataclass
class TrainingBatch:
    """N simulated triples: theta (N, d), x (N, d_X, n), u (N, d)."""
    theta: np.ndarray
    x: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        n = self.theta.shape[0]
        if self.x.shape[0] != n or self.u.shape[0] != n:
            raise ValueError(f"batch arrays disagree on size: theta {self.theta.shape}, x {self.x.shape}, u {self.u.shape}")
        if self.theta.shape[1] != self.u.shape[1]:
            raise ValueError(f"theta dimension {self.theta.shape[1]} != source dimension {self.u.shape[1]}")

    def __len__(self) -> int:
        return self.theta.shape[0]

    def to_frame(self) -> pd.DataFrame:
        """One row per triple: theta_1..theta_d, flattened x (row-major d_X x n), u_1..u_d."""
        d = self.theta.shape[1]
        flat = self.x.reshape(len(self), -1)
        d_x, n = self.x.shape[1:]
        columns = [f"theta_{k + 1}" for k in range(d)]
        columns += [f"x_{r + 1}_{c + 1}" for r in range(d_x) for c in range(n)]
        columns += [f"u_{k + 1}" for k in range(d)]
        return pd.DataFrame(np.hstack([self.theta, flat, self.u]), columns=columns)


class Simulator:
    """Prior plus forward model. Subclasses define the prior, the likelihood and the dimensions."""

    name = "simulator"
    param_dim = 1
    data_dim = 1
    has_oracle = False

    @property
    def n_obs(self) -> int:
        raise NotImplementedError

    def sample_prior(self, count: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def simulate_data(self, theta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Data matrices (N, d_X, n) for each row of ``theta``."""
        raise NotImplementedError

    def simulate(self, count: int, rng: np.random.Generator) -> TrainingBatch:
        """Fresh (theta, X) pairs from prior x likelihood, each with a source draw U ~ F_U."""
        theta = self.sample_prior(count, rng)
        x = self.simulate_data(theta, rng)
        u = sample_source(self.param_dim, count, 1.0, rng).u
        return TrainingBatch(theta, x, u)

    def prior_support(self) -> np.ndarray:
        """(d, 2) box of lower and upper bounds; infinite where unbounded."""
        return np.tile([-np.inf, np.inf], (self.param_dim, 1))

    def posterior_oracle(self, x: np.ndarray):
        raise NotImplementedError(f"simulator '{self.name}' has no posterior oracle")

    def observed_data(self, value: Union[float, np.ndarray]) -> np.ndarray:
        """Data matrix (d_X, n) for an observed value; subclasses define the convention."""
        x = np.asarray(value, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape != (self.data_dim, self.n_obs):
            raise ValueError(f"expected data of shape ({self.data_dim}, {self.n_obs}), got {x.shape}")
        return x


def export_batch_csv(batch: TrainingBatch, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    batch.to_frame().to_csv(path, index=False)
    return path
