"""Input-convex network: convex in its input by construction.

z_1 = celu(u W_0 + c_0)
z_{k+1} = celu(z_k relu(V_k) + u W_k + c_k)
out = z_L relu(V_L) + u W_L + c_L

The skip weights V_k are kept nonnegative both by clamping after each
optimizer step and by a nonneg projection node in the forward pass, and CELU
is convex and nondecreasing, so every output coordinate is convex in u.
"""

from typing import List

import numpy as np

from autodiff import Graph, Node, Parameter
from .layers import uniform_init


class Icnn:
    """ICNN with ``hidden_layers`` hidden layers of ``width`` units and ``out_dim`` outputs."""

    def __init__(self, name: str, in_dim: int, width: int, hidden_layers: int, out_dim: int, rng: np.random.Generator):
        if hidden_layers < 1:
            raise ValueError(f"Icnn '{name}' needs at least one hidden layer")
        self.name = name
        self.in_dim = in_dim
        self.width = width
        self.hidden_layers = hidden_layers
        self.out_dim = out_dim

        self.w_u: List[Parameter] = []
        self.w_z: List[Parameter] = []
        self.bias: List[Parameter] = []
        for k in range(hidden_layers + 1):
            out = width if k < hidden_layers else out_dim
            self.w_u.append(Parameter(f"{name}.w_u{k}", uniform_init(rng, in_dim, (in_dim, out))))
            self.bias.append(Parameter(f"{name}.bias{k}", uniform_init(rng, in_dim, (1, out))))
            if k > 0:
                self.w_z.append(Parameter(f"{name}.w_z{k}", np.abs(uniform_init(rng, width, (width, out))), nonneg=True))

    def parameters(self) -> List[Parameter]:
        params = []
        for k in range(self.hidden_layers + 1):
            params.append(self.w_u[k])
            if k > 0:
                params.append(self.w_z[k - 1])
            params.append(self.bias[k])
        return params

    def project(self):
        for p in self.w_z:
            p.project()

    def build(self, graph: Graph, u: Node) -> Node:
        def affine(k: int) -> Node:
            return graph.add(graph.matmul(u, graph.parameter(self.w_u[k])), graph.parameter(self.bias[k]))

        z = graph.celu(affine(0))
        for k in range(1, self.hidden_layers + 1):
            skip = graph.matmul(z, graph.nonneg(graph.parameter(self.w_z[k - 1])))
            z = graph.add(skip, affine(k))
            if k < self.hidden_layers:
                z = graph.celu(z)
        return z

    def evaluate(self, u: np.ndarray) -> np.ndarray:
        """Forward pass on an ``(N, in_dim)`` batch, returns ``(N, out_dim)``."""
        graph = Graph(self.name)
        out = self.build(graph, graph.placeholder("u", (None, self.in_dim)))
        return graph.forward({"u": np.atleast_2d(u)}, out)
