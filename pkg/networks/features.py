"""Summary-statistic networks f(X) = [h1(X), h2(X)] with mean-zero centering.

Data matrices are d_X x n (one column per observation). Batches of them are
stacked as (B, d_X, n) and turned into an observation-major (B, n, d_X) array
before entering a graph, since no gradient is ever taken with respect to X.
"""

from typing import List, Optional, Tuple

import numpy as np
from loguru import logger

from autodiff import Graph, Node, Parameter
from .layers import Dense, Mlp


def observation_batch(x: np.ndarray, data_dim: int) -> np.ndarray:
    """(d_X, n) or (B, d_X, n) data -> (B, n, d_X) observations."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1 and data_dim == 1:
        x = x[None, :]
    if x.ndim == 2:
        x = x[None, :, :]
    if x.ndim != 3 or x.shape[1] != data_dim:
        raise ValueError(f"data must have {data_dim} rows (d_X), got array of shape {x.shape}")
    if x.shape[2] < 1:
        raise ValueError("data must contain at least one observation")
    return np.ascontiguousarray(np.transpose(x, (0, 2, 1)))


class DeepSetNet:
    """h1(X) = rho(sum_i phi(X_i)); exact under column permutations for any n."""

    def __init__(self, name: str, data_dim: int, width: int, out_dim: int, rng: np.random.Generator):
        self.name = name
        self.out_dim = out_dim
        self.width = width
        self.encoder = Mlp(f"{name}.encoder", [data_dim, width, width], rng)
        self.post = Mlp(f"{name}.post", [width, width, out_dim], rng)

    def parameters(self) -> List[Parameter]:
        return self.encoder.parameters() + self.post.parameters()

    def build(self, graph: Graph, obs: Node, batch: int, n: int) -> Node:
        data_dim = self.encoder.sizes[0]
        flat = graph.reshape(obs, (batch * n, data_dim))
        encoded = graph.reshape(self.encoder.build(graph, flat), (batch, n, self.width))
        return self.post.build(graph, graph.sum(encoded, axis=1))


class LstmNet:
    """Single-layer LSTM; the summary is the final hidden state."""

    def __init__(self, name: str, data_dim: int, hidden: int, rng: np.random.Generator):
        self.name = name
        self.data_dim = data_dim
        self.out_dim = hidden
        self.gates = Dense(f"{name}.gates", data_dim + hidden, 4 * hidden, rng)

    def parameters(self) -> List[Parameter]:
        return self.gates.parameters()

    def build(self, graph: Graph, obs: Node, batch: int, n: int) -> Node:
        hsize = self.out_dim
        h = graph.constant(np.zeros((batch, hsize)))
        c = graph.constant(np.zeros((batch, hsize)))
        for t in range(n):
            x_t = graph.reshape(graph.slice(obs, t, t + 1, axis=1), (batch, self.data_dim))
            z = self.gates.build(graph, graph.concat([x_t, h], axis=1))
            i = graph.sigmoid(graph.slice(z, 0, hsize))
            f = graph.sigmoid(graph.slice(z, hsize, 2 * hsize))
            g = graph.tanh(graph.slice(z, 2 * hsize, 3 * hsize))
            o = graph.sigmoid(graph.slice(z, 3 * hsize, 4 * hsize))
            c = graph.add(graph.mul(f, c), graph.mul(i, g))
            h = graph.mul(o, graph.tanh(c))
        return h


class MlpStatistics:
    """Fully connected net on the flattened data; tied to a fixed n."""

    def __init__(self, name: str, data_dim: int, n_obs: int, width: int, out_dim: int, rng: np.random.Generator):
        self.name = name
        self.n_obs = n_obs
        self.out_dim = out_dim
        self.net = Mlp(f"{name}.net", [data_dim * n_obs, width, width, out_dim], rng)

    def parameters(self) -> List[Parameter]:
        return self.net.parameters()

    def build(self, graph: Graph, obs: Node, batch: int, n: int) -> Node:
        if n != self.n_obs:
            raise ValueError(f"mlp features were built for n={self.n_obs} observations, got n={n}")
        return self.net.build(graph, graph.reshape(obs, (batch, self.net.sizes[0])))


class ManualStatistics:
    """Per data row: sample mean and sample standard deviation. No weights."""

    def __init__(self, data_dim: int):
        self.out_dim = 2 * data_dim

    def parameters(self) -> List[Parameter]:
        return []

    @staticmethod
    def compute(obs: np.ndarray) -> np.ndarray:
        ddof = 1 if obs.shape[1] > 1 else 0
        return np.concatenate([obs.mean(axis=1), obs.std(axis=1, ddof=ddof)], axis=1)


class MeanStatistics:
    """Per data row: sample mean only. Not sufficient once the variance is unknown."""

    def __init__(self, data_dim: int):
        self.out_dim = data_dim

    def parameters(self) -> List[Parameter]:
        return []

    @staticmethod
    def compute(obs: np.ndarray) -> np.ndarray:
        return obs.mean(axis=1)


class IdentityStatistics:
    """f(X) = X, flattened observation-major; tied to a fixed n."""

    def __init__(self, data_dim: int, n_obs: int):
        self.n_obs = n_obs
        self.out_dim = data_dim * n_obs

    def parameters(self) -> List[Parameter]:
        return []

    def compute(self, obs: np.ndarray) -> np.ndarray:
        if obs.shape[1] != self.n_obs:
            raise ValueError(f"identity features were built for n={self.n_obs} observations, got n={obs.shape[1]}")
        return obs.reshape(obs.shape[0], -1)


WEIGHT_FREE = (ManualStatistics, MeanStatistics, IdentityStatistics)


class FeatureMap:
    """f(X) = [h1(X), h2(X)] centered to mean zero.

    Training mode subtracts the batch mean and folds it into an exponential
    running mean; inference mode subtracts the stored running mean.
    """

    def __init__(self, kind: str, data_dim: int, q1: int, q2: int, width: int,
                 rng: np.random.Generator, n_obs: Optional[int] = None, momentum: float = 0.9):
        self.kind = kind
        self.data_dim = data_dim
        self.momentum = momentum
        self.training = True
        if kind == "deepset":
            self.h1 = DeepSetNet("f.deepset", data_dim, width, q1, rng)
        elif kind == "mlp":
            if n_obs is None:
                raise ValueError("mlp features need a fixed n_obs")
            self.h1 = MlpStatistics("f.mlp", data_dim, n_obs, width, q1, rng)
        elif kind == "manual":
            self.h1 = ManualStatistics(data_dim)
        elif kind == "mean":
            self.h1 = MeanStatistics(data_dim)
        elif kind == "identity":
            if n_obs is None:
                raise ValueError("identity features need a fixed n_obs")
            self.h1 = IdentityStatistics(data_dim, n_obs)
        elif kind == "none":
            self.h1 = None
        else:
            raise ValueError(f"unknown feature map '{kind}'")
        self.h2 = LstmNet("f.lstm", data_dim, q2, rng) if q2 > 0 else None
        self.q1 = self.h1.out_dim if self.h1 is not None else 0
        self.q2 = q2
        self.running_mean = np.zeros(self.q)

    @property
    def q(self) -> int:
        return self.q1 + self.q2

    def parameters(self) -> List[Parameter]:
        params = self.h1.parameters() if self.h1 is not None else []
        if self.h2 is not None:
            params += self.h2.parameters()
        return params

    def build(self, graph: Graph, obs: Node, obs_value: np.ndarray, training: Optional[bool] = None) -> Tuple[Optional[Node], Optional[Node]]:
        """Record f on an observation batch.

        Returns ``(centered, batch_mean)``; ``batch_mean`` is None in inference
        mode and both are None when q = 0.
        """
        if self.q == 0:
            return None, None
        training = self.training if training is None else training
        batch, n, _ = obs_value.shape
        parts = []
        if isinstance(self.h1, WEIGHT_FREE):
            parts.append(graph.constant(self.h1.compute(obs_value), name=f"f.{self.kind}"))
        elif self.h1 is not None:
            parts.append(self.h1.build(graph, obs, batch, n))
        if self.h2 is not None:
            parts.append(self.h2.build(graph, obs, batch, n))
        raw = graph.concat(parts, axis=1)
        if training:
            batch_mean = graph.mean(raw, axis=0, keepdims=True)
            return graph.sub(raw, batch_mean), batch_mean
        return graph.sub(raw, graph.constant(self.running_mean[None, :], name="f.running_mean")), None

    def update_running_mean(self, batch_mean: np.ndarray):
        self.running_mean = self.momentum * self.running_mean + (1.0 - self.momentum) * np.ravel(batch_mean)

    def evaluate(self, x: np.ndarray, mode: str = "inference") -> np.ndarray:
        """f on a batch without touching the running mean. ``mode`` is 'training' or 'inference'."""
        if mode not in ("training", "inference"):
            raise ValueError(f"mode must be 'training' or 'inference', got '{mode}'")
        obs_value = observation_batch(x, self.data_dim)
        if self.q == 0:
            return np.zeros((obs_value.shape[0], 0))
        graph = Graph("features")
        obs = graph.placeholder("obs", (None, None, self.data_dim))
        out, _ = self.build(graph, obs, obs_value, training=(mode == "training"))
        return graph.forward({"obs": obs_value}, out)


def feature_forward(f: FeatureMap, x: np.ndarray, mode: str = "inference") -> np.ndarray:
    """Centered features for a batch of data matrices.

    In training mode the running mean is updated with this batch's mean.
    """
    obs_value = observation_batch(x, f.data_dim)
    if obs_value.shape[0] == 0:
        raise ValueError("empty batch")
    if f.q == 0:
        return np.zeros((obs_value.shape[0], 0))
    training = mode == "training"
    if not training and mode != "inference":
        raise ValueError(f"mode must be 'training' or 'inference', got '{mode}'")
    graph = Graph("features")
    obs = graph.placeholder("obs", (None, None, f.data_dim))
    out, batch_mean = f.build(graph, obs, obs_value, training=training)
    values = graph.forward({"obs": obs_value}, out)
    if training:
        f.update_running_mean(batch_mean.value)
        logger.debug(f"Feature running mean updated: {np.round(f.running_mean, 4).tolist()}")
    return values
