"""Dense building blocks shared by the ICNNs, feature nets and pinball nets"""

from typing import List, Sequence

import numpy as np

from autodiff import Graph, Node, Parameter


def uniform_init(rng: np.random.Generator, fan_in: int, shape: Sequence[int]) -> np.ndarray:
    """uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))"""
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=tuple(shape))


class Dense:
    """Affine layer ``x @ W + b`` on row-major batches."""

    def __init__(self, name: str, in_dim: int, out_dim: int, rng: np.random.Generator):
        self.name = name
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = Parameter(f"{name}.weight", uniform_init(rng, in_dim, (in_dim, out_dim)))
        self.bias = Parameter(f"{name}.bias", uniform_init(rng, in_dim, (1, out_dim)))

    def parameters(self) -> List[Parameter]:
        """Weight and bias."""
        return [self.weight, self.bias]

    def build(self, graph: Graph, x: Node) -> Node:
        """Record the affine map on ``x``."""
        return graph.add(graph.matmul(x, graph.parameter(self.weight)), graph.parameter(self.bias))


class Mlp:
    """Stack of Dense layers with CELU between them (none after the last)."""

    def __init__(self, name: str, sizes: Sequence[int], rng: np.random.Generator, final_activation: bool = False):
        if len(sizes) < 2:
            raise ValueError(f"Mlp '{name}' needs at least input and output sizes, got {list(sizes)}")
        self.name = name
        self.sizes = list(sizes)
        self.final_activation = final_activation
        self.layers = [
            Dense(f"{name}.{k}", sizes[k], sizes[k + 1], rng) for k in range(len(sizes) - 1)
        ]

    def parameters(self) -> List[Parameter]:
        """Parameters of every layer, in order."""
        return [p for layer in self.layers for p in layer.parameters()]

    def build(self, graph: Graph, x: Node) -> Node:
        """Record the stack on ``x``."""
        h = x
        for k, layer in enumerate(self.layers):
            h = layer.build(graph, h)
            if k < len(self.layers) - 1 or self.final_activation:
                h = graph.celu(h)
        return h
