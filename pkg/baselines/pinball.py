"""Pinball (quantile) loss, its Monte Carlo CRPS integral, and the implicit quantile net"""

from typing import List, Optional

import numpy as np

from autodiff import Graph, Node, Parameter
from networks import Mlp


def pinball_loss(tau: float, q, z):
    """(tau - 1{z < q}) (z - q); elementwise on arrays, always >= 0."""
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    diff = np.asarray(z, dtype=np.float64) - np.asarray(q, dtype=np.float64)
    loss = 0.5 * np.abs(diff) + (tau - 0.5) * diff
    return float(loss) if np.ndim(loss) == 0 else loss


class PinballNet:
    """q = net(tau, conditioning); tau enters by direct concatenation."""

    def __init__(self, name: str, cond_dim: int, rng: np.random.Generator, width: int = 64, hidden_layers: int = 3):
        self.name = name
        self.cond_dim = cond_dim
        self.mlp = Mlp(name, [1 + cond_dim] + [width] * hidden_layers + [1], rng)

    def parameters(self) -> List[Parameter]:
        return self.mlp.parameters()

    def build(self, graph: Graph, tau: Node, cond: Optional[Node]) -> Node:
        inp = tau if cond is None else graph.concat([tau, cond], axis=1)
        return self.mlp.build(graph, inp)

    def quantile(self, tau: np.ndarray, cond: Optional[np.ndarray] = None) -> np.ndarray:
        """Quantile estimates for M (tau, conditioning row) pairs; returns shape (M,)."""
        tau = np.asarray(tau, dtype=np.float64).reshape(-1, 1)
        if self.cond_dim:
            cond = np.asarray(cond, dtype=np.float64).reshape(len(tau), self.cond_dim)
            inp = np.hstack([tau, cond])
        else:
            inp = tau
        graph = Graph(f"{self.name}.quantile")
        x = graph.placeholder("input", (None, 1 + self.cond_dim))
        out = self.mlp.build(graph, x)
        return graph.forward({"input": inp}, out)[:, 0].copy()


def pinball_node(graph: Graph, tau: Node, q: Node, z: Node) -> Node:
    """tau (z - q) + max(q - z, 0), the same loss written with differentiable primitives."""
    return graph.add(graph.mul(tau, graph.sub(z, q)), graph.nonneg(graph.sub(q, z)))


def repeat_rows(graph: Graph, node: Node, batch: int, draws: int) -> Node:
    """Each of ``batch`` rows repeated ``draws`` times, as a matmul with a 0/1 matrix."""
    if draws == 1:
        return node
    return graph.matmul(graph.constant(np.kron(np.eye(batch), np.ones((draws, 1)))), node)


def crps_graph(graph: Graph, net: PinballNet, cond: Optional[Node], z: np.ndarray, taus: np.ndarray) -> Node:
    """Record (2/K) sum_k Lambda_{tau_k}(net(tau_k, cond), z), averaged over the batch.

    ``taus`` has shape (B, K); ``cond`` is a (B, c) node or None.
    """
    batch, draws = taus.shape
    tau_node = graph.constant(taus.reshape(-1, 1), name="tau")
    z_node = graph.constant(np.repeat(np.asarray(z, dtype=np.float64).reshape(-1), draws)[:, None], name="z")
    cond_rep = None if cond is None else repeat_rows(graph, cond, batch, draws)
    q = net.build(graph, tau_node, cond_rep)
    return graph.scale(graph.mean(pinball_node(graph, tau_node, q, z_node)), 2.0)


def crps_mc_loss(net: PinballNet, cond: Optional[np.ndarray], z, rng: np.random.Generator, K: int,
                 taus: Optional[np.ndarray] = None) -> float:
    """Monte Carlo CRPS with K uniform quantile levels per sample.

    Pass ``taus`` of shape (B, K) to fix the levels instead of drawing them.
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    batch = len(z)
    if taus is None:
        taus = rng.uniform(0.0, 1.0, size=(batch, K))
    taus = np.asarray(taus, dtype=np.float64).reshape(batch, K)
    graph = Graph("crps")
    cond_node = None
    if net.cond_dim:
        cond_node = graph.constant(np.asarray(cond, dtype=np.float64).reshape(batch, net.cond_dim), name="cond")
    loss = crps_graph(graph, net, cond_node, z, taus)
    return float(graph.forward({}, loss))


def quantile_monotonicity(net: PinballNet, cond: Optional[np.ndarray], rng: np.random.Generator, pairs: int = 1000) -> float:
    """Fraction of random pairs tau < tau' with net(tau, c) <= net(tau', c).

    Conditioning rows are drawn from ``cond``; one minus this is the crossing rate.
    """
    lo = rng.uniform(0.0, 1.0, size=pairs)
    hi = rng.uniform(0.0, 1.0, size=pairs)
    lo, hi = np.minimum(lo, hi), np.maximum(lo, hi)
    rows = None
    if net.cond_dim:
        cond = np.atleast_2d(np.asarray(cond, dtype=np.float64))
        rows = cond[rng.integers(0, len(cond), size=pairs)]
    return float(np.mean(net.quantile(lo, rows) <= net.quantile(hi, rows)))
