"""Empirical dual objective over a mini-batch.

S[i, j] = U_j^T theta_i - phi(U_j) - b(U_j)^T f(X_i)
L1 = mean_i [ phi(U_i) + max_j S[i, j] ]
"""

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from autodiff import Graph, NonFiniteError, Node
from networks import PotentialModel, observation_batch
from simulators import TrainingBatch


class NonFiniteScoreError(NonFiniteError):
    """Score matrix entry is NaN or Inf"""

    def __init__(self, i: int, j: int):
        super().__init__(f"non-finite score S[{i}, {j}]")
        self.location = (i, j)


@dataclass
class LossGraph:
    graph: Graph
    loss: Node
    scores: Node
    batch_mean: Optional[Node]
    inputs: Dict[str, np.ndarray]


def build_loss(model: PotentialModel, batch: TrainingBatch, training: Optional[bool] = None) -> LossGraph:
    training = model.training if training is None else training
    obs_value = observation_batch(batch.x, model.data_dim)
    n_b = len(batch)
    graph = Graph("loss_L1")
    theta = graph.placeholder("theta", (n_b, model.d))
    u = graph.placeholder("u", (n_b, model.d))
    obs = graph.placeholder("obs", (n_b, None, model.data_dim))

    feats, batch_mean = model.features.build(graph, obs, obs_value, training=training)
    _, phi_u, b_u = model.build_potential(graph, u, feats)

    scores = graph.sub(graph.matmul(theta, graph.transpose(u)), graph.transpose(phi_u))
    if b_u is not None:
        scores = graph.sub(scores, graph.matmul(feats, graph.transpose(b_u)))
    loss = graph.mean(graph.add(phi_u, graph.row_max(scores)))
    return LossGraph(graph, loss, scores, batch_mean, {"theta": batch.theta, "u": batch.u, "obs": obs_value})


def _evaluate(lg: LossGraph) -> float:
    lg.graph.forward(lg.inputs, lg.loss)
    bad = ~np.isfinite(lg.scores.value)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise NonFiniteScoreError(int(i), int(j))
    return float(lg.loss.value)


def loss_L1(model: PotentialModel, batch: TrainingBatch, training: Optional[bool] = None) -> float:
    """Dual objective on ``batch``; feature centering follows the model's mode unless ``training`` is given."""
    if len(batch) < 1:
        raise ValueError("empty batch")
    return _evaluate(build_loss(model, batch, training))


def loss_and_grads(model: PotentialModel, batch: TrainingBatch):
    """Training-mode loss, parameter gradients and the raw feature batch mean (or None)."""
    lg = build_loss(model, batch, training=True)
    value = _evaluate(lg)
    grads = lg.graph.backward(lg.loss, wrt=[p.name for p in model.parameters()])
    batch_mean = None if lg.batch_mean is None else lg.batch_mean.value
    return value, grads, batch_mean
