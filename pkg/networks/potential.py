"""The affine-in-features potential psi(u, x) = phi(u) + b(u)^T f(x) and its u-gradient"""

from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from autodiff import Graph, Node, Parameter
from .features import FeatureMap, observation_batch
from .icnn import Icnn

BALL_TOLERANCE = 1e-9


class SourceSupportError(ValueError):
    """Source point outside the unit ball"""


class NetworkConfig(BaseModel):
    """Architecture of a PotentialModel"""
    model_config = ConfigDict(extra="forbid")

    param_dim: int = Field(ge=1)
    data_dim: int = Field(default=1, ge=1)
    n_obs: Optional[int] = Field(default=None, ge=1)
    icnn_width: int = Field(default=64, ge=1)
    icnn_layers: int = Field(default=3, ge=1)
    features: Literal["deepset", "mlp", "manual", "mean", "identity", "none"] = "deepset"
    feature_width: int = Field(default=64, ge=1)
    q1: int = Field(default=2, ge=0)
    q2: int = Field(default=0, ge=0)
    centering_momentum: float = Field(default=0.9, ge=0.0, lt=1.0)

    @model_validator(mode="after")
    def _check_features(self):
        if self.features in ("mlp", "identity") and self.n_obs is None:
            raise ValueError(f"features '{self.features}' requires n_obs")
        if self.features == "manual":
            self.q1 = 2 * self.data_dim
        if self.features == "mean":
            self.q1 = self.data_dim
        if self.features == "identity":
            self.q1 = self.data_dim * self.n_obs
        if self.features == "none":
            self.q1 = 0
        return self


def check_in_ball(u: np.ndarray) -> np.ndarray:
    u = np.atleast_2d(np.asarray(u, dtype=np.float64))
    norms = np.linalg.norm(u, axis=1)
    if np.any(norms > 1.0 + BALL_TOLERANCE):
        worst = int(np.argmax(norms))
        raise SourceSupportError(f"u outside the unit ball: row {worst} has norm {norms[worst]:.6g}")
    return u


class PotentialModel:
    """phi (scalar ICNN), b (q-output ICNN) and the feature map f."""

    def __init__(self, config: NetworkConfig, rng: np.random.Generator):
        self.config = config
        self.features = FeatureMap(
            config.features, config.data_dim, config.q1, config.q2, config.feature_width,
            rng, n_obs=config.n_obs, momentum=config.centering_momentum,
        )
        d = config.param_dim
        self.phi = Icnn("phi", d, config.icnn_width, config.icnn_layers, 1, rng)
        self.b = Icnn("b", d, config.icnn_width, config.icnn_layers, self.q, rng) if self.q > 0 else None

    @property
    def d(self) -> int:
        return self.config.param_dim

    @property
    def q(self) -> int:
        return self.features.q

    @property
    def data_dim(self) -> int:
        return self.config.data_dim

    @property
    def training(self) -> bool:
        return self.features.training

    def train(self) -> "PotentialModel":
        self.features.training = True
        return self

    def eval(self) -> "PotentialModel":
        self.features.training = False
        return self

    def parameters(self) -> List[Parameter]:
        params = self.phi.parameters()
        if self.b is not None:
            params += self.b.parameters()
        return params + self.features.parameters()

    def project(self):
        self.phi.project()
        if self.b is not None:
            self.b.project()

    def build_potential(self, graph: Graph, u: Node, feats: Optional[Node]) -> Tuple[Node, Node, Optional[Node]]:
        """Record phi(U), b(U) and psi rows. Returns ``(psi, phi_u, b_u)`` with psi of shape (N, 1)."""
        phi_u = self.phi.build(graph, u)
        if self.b is None or feats is None:
            return phi_u, phi_u, None
        b_u = self.b.build(graph, u)
        psi = graph.add(phi_u, graph.sum(graph.mul(b_u, feats), axis=1, keepdims=True))
        return psi, phi_u, b_u

    def _inference_graph(self, u: np.ndarray, x: np.ndarray) -> Tuple[Graph, Node, Node, dict]:
        obs_value = observation_batch(x, self.data_dim)
        if obs_value.shape[0] != 1:
            raise ValueError(f"expected a single data matrix, got a batch of {obs_value.shape[0]}")
        graph = Graph("potential")
        u_node = graph.placeholder("u", (None, self.d))
        obs = graph.placeholder("obs", (1, None, self.data_dim))
        feats, _ = self.features.build(graph, obs, obs_value, training=False)
        psi, _, _ = self.build_potential(graph, u_node, feats)
        total = graph.sum(psi)
        return graph, psi, total, {"u": u, "obs": obs_value}

    def potential(self, u: np.ndarray, x: np.ndarray) -> np.ndarray:
        """psi(u_i, x) for each row of ``u``; returns shape (N,)."""
        u = check_in_ball(u)
        graph, psi, _, inputs = self._inference_graph(u, x)
        return graph.forward(inputs, psi)[:, 0].copy()

    def grad_u(self, u: np.ndarray, x: np.ndarray) -> np.ndarray:
        """grad_u psi(u_i, x) for each row of ``u``; returns shape (N, d)."""
        u = check_in_ball(u)
        graph, _, total, inputs = self._inference_graph(u, x)
        graph.forward(inputs, total)
        return graph.backward(total, wrt=["u"])["u"]

    def feature_vector(self, x: np.ndarray) -> np.ndarray:
        return self.features.evaluate(x, "inference")[0]

    def metadata(self) -> dict:
        return {"network": self.config.model_dump(), "q": self.q}


class QuadraticPotential:
    """psi(u, x) = u^T A u / 2 + c^T u, ignoring x; the quantile map is u -> A u + c.

    With A = I and c = 0 the quantile map is the identity, which gives exact
    references for credible sets, ranks and coverage.
    """

    training = False

    def __init__(self, dim: int, matrix: Optional[np.ndarray] = None, shift: Optional[np.ndarray] = None, data_dim: int = 1):
        matrix = np.eye(dim) if matrix is None else np.asarray(matrix, dtype=np.float64)
        self.matrix = 0.5 * (matrix + matrix.T)
        self.shift = np.zeros(dim) if shift is None else np.asarray(shift, dtype=np.float64)
        self.config = NetworkConfig(param_dim=dim, data_dim=data_dim, features="none")
        self.data_dim = data_dim

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    def potential(self, u: np.ndarray, x: np.ndarray) -> np.ndarray:
        u = check_in_ball(u)
        return 0.5 * np.einsum("ni,ij,nj->n", u, self.matrix, u) + u @ self.shift

    def grad_u(self, u: np.ndarray, x: np.ndarray) -> np.ndarray:
        u = check_in_ball(u)
        return u @ self.matrix.T + self.shift


def potential_eval(model: PotentialModel, u: np.ndarray, x: np.ndarray) -> float:
    """psi(u, x) for a single source point."""
    return float(model.potential(np.reshape(u, (1, -1)), x)[0])


def potential_grad_u(model: PotentialModel, u: np.ndarray, x: np.ndarray) -> np.ndarray:
    """grad_u psi(u, x) for a single source point."""
    return model.grad_u(np.reshape(u, (1, -1)), x)[0]
