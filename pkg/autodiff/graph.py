"""Reverse-mode automatic differentiation over a recorded list of dense ops.

A :class:`Graph` is a Wengert list: every op appends one :class:`Node` whose
inputs were appended earlier, so creation order is a topological order.
Building a graph only records nodes; :meth:`Graph.forward` evaluates them and
caches values, and :meth:`Graph.backward` walks the list in reverse.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit


class GraphError(RuntimeError):
    """Misuse of a computation graph"""


class ShapeError(GraphError, ValueError):
    """Operand shapes incompatible at a node"""


class NonFiniteError(GraphError, ValueError):
    """NaN or Inf crossing a graph boundary"""


@dataclass
class Parameter:
    """A named trainable tensor.

    ``nonneg`` marks weights that must stay elementwise >= 0 (ICNN skip weights).
    """
    name: str
    value: np.ndarray
    nonneg: bool = False

    def __post_init__(self):
        self.value = np.asarray(self.value, dtype=np.float64)
        if self.nonneg:
            np.maximum(self.value, 0.0, out=self.value)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    def project(self):
        """Clamp to the feasible set (no-op for unconstrained weights)."""
        if self.nonneg:
            np.maximum(self.value, 0.0, out=self.value)


@dataclass
class Node:
    index: int
    op: str
    inputs: Tuple["Node", ...]
    name: Optional[str] = None
    meta: Dict[str, Any] = field(default_factory=dict)
    value: Optional[np.ndarray] = None

    def __repr__(self) -> str:
        label = f" '{self.name}'" if self.name else ""
        return f"Node(#{self.index} {self.op}{label})"

    @property
    def shape(self) -> Tuple[int, ...]:
        if self.value is None:
            raise GraphError(f"{self!r} has not been evaluated")
        return self.value.shape


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _celu(x: np.ndarray, alpha: float) -> np.ndarray:
    return np.where(x > 0, x, alpha * np.expm1(np.minimum(x, 0.0) / alpha))


def _row_max_grad(g, vals, out, meta):
    (x,) = vals
    idx = np.argmax(x, axis=1)
    grad = np.zeros_like(x)
    grad[np.arange(x.shape[0]), idx] = g[:, 0]
    return [grad]


def _reduce_grad(g, vals, out, meta):
    (x,) = vals
    axis = meta.get("axis")
    if axis is not None and not meta.get("keepdims"):
        g = np.expand_dims(g, axis)
    grad = np.broadcast_to(g, x.shape)
    if meta["kind"] == "mean":
        count = x.size if axis is None else x.shape[axis]
        grad = grad / count
    return [np.array(grad)]


def _slice_grad(g, vals, out, meta):
    (x,) = vals
    grad = np.zeros_like(x)
    index = [slice(None)] * x.ndim
    index[meta["axis"]] = slice(meta["start"], meta["stop"])
    grad[tuple(index)] = g
    return [grad]


def _concat_grad(g, vals, out, meta):
    axis = meta["axis"]
    bounds = np.cumsum([v.shape[axis] for v in vals])[:-1]
    return list(np.split(g, bounds, axis=axis))


def _matmul_forward(vals, meta):
    a, b = vals
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul of {a.shape} and {b.shape}")
    return a @ b


def _slice_forward(vals, meta):
    index = [slice(None)] * vals[0].ndim
    index[meta["axis"]] = slice(meta["start"], meta["stop"])
    return vals[0][tuple(index)]


def _reshape_forward(vals, meta):
    return vals[0].reshape(meta["shape"])


def _reduce_forward(vals, meta):
    reducer = np.mean if meta["kind"] == "mean" else np.sum
    return np.asarray(reducer(vals[0], axis=meta.get("axis"), keepdims=meta.get("keepdims", False)))


# Function library: op -> forward(values, meta)
FORWARD: Dict[str, Callable[[List[np.ndarray], Dict[str, Any]], np.ndarray]] = {
    "matmul": _matmul_forward,
    "add": lambda v, m: v[0] + v[1],
    "sub": lambda v, m: v[0] - v[1],
    "mul": lambda v, m: v[0] * v[1],
    "scale": lambda v, m: m["factor"] * v[0],
    "celu": lambda v, m: _celu(v[0], m["alpha"]),
    "nonneg": lambda v, m: np.maximum(v[0], 0.0),
    "sigmoid": lambda v, m: expit(v[0]),
    "tanh": lambda v, m: np.tanh(v[0]),
    "row_max": lambda v, m: np.max(v[0], axis=1, keepdims=True),
    "reduce": _reduce_forward,
    "transpose": lambda v, m: v[0].T,
    "reshape": _reshape_forward,
    "slice": _slice_forward,
    "concat": lambda v, m: np.concatenate(v, axis=m["axis"]),
}

# Vector-Jacobian products: op -> vjp(upstream, values, output, meta) -> one grad per input
VJP: Dict[str, Callable[..., List[np.ndarray]]] = {
    "matmul": lambda g, v, out, m: [g @ v[1].T, v[0].T @ g],
    "add": lambda g, v, out, m: [_unbroadcast(g, v[0].shape), _unbroadcast(g, v[1].shape)],
    "sub": lambda g, v, out, m: [_unbroadcast(g, v[0].shape), _unbroadcast(-g, v[1].shape)],
    "mul": lambda g, v, out, m: [_unbroadcast(g * v[1], v[0].shape), _unbroadcast(g * v[0], v[1].shape)],
    "scale": lambda g, v, out, m: [m["factor"] * g],
    "celu": lambda g, v, out, m: [g * np.where(v[0] > 0, 1.0, np.exp(np.minimum(v[0], 0.0) / m["alpha"]))],
    # subgradient taken as 1 at zero
    "nonneg": lambda g, v, out, m: [g * (v[0] >= 0)],
    "sigmoid": lambda g, v, out, m: [g * out * (1.0 - out)],
    "tanh": lambda g, v, out, m: [g * (1.0 - out ** 2)],
    "row_max": _row_max_grad,
    "reduce": _reduce_grad,
    "transpose": lambda g, v, out, m: [g.T],
    "reshape": lambda g, v, out, m: [g.reshape(v[0].shape)],
    "slice": _slice_grad,
    "concat": _concat_grad,
}


class Graph:
    """Recorded feedforward computation with cached forward values."""

    def __init__(self, name: str = "graph"):
        self.name = name
        self.nodes: List[Node] = []
        self.parameters: Dict[str, Parameter] = {}
        self._param_nodes: Dict[str, Node] = {}
        self._placeholders: Dict[str, Node] = {}
        self._evaluated = False

    def __len__(self) -> int:
        return len(self.nodes)

    def _record(self, op: str, inputs: Sequence[Node], name: Optional[str] = None, **meta) -> Node:
        for node in inputs:
            if not isinstance(node, Node) or node.index >= len(self.nodes) or self.nodes[node.index] is not node:
                raise GraphError(f"{op}: input {node!r} does not belong to graph '{self.name}'")
        node = Node(index=len(self.nodes), op=op, inputs=tuple(inputs), name=name, meta=meta)
        self.nodes.append(node)
        self._evaluated = False
        return node

    # -- leaves -----------------------------------------------------------

    def placeholder(self, name: str, shape: Optional[Sequence[Optional[int]]] = None) -> Node:
        """Named input; ``None`` entries in ``shape`` match any size."""
        if name in self._placeholders:
            raise GraphError(f"duplicate placeholder '{name}'")
        node = self._record("placeholder", (), name=name, shape=None if shape is None else tuple(shape))
        self._placeholders[name] = node
        return node

    def parameter(self, param: Parameter) -> Node:
        """Leaf bound to a trainable tensor; one node per parameter name."""
        if param.name in self._param_nodes:
            return self._param_nodes[param.name]
        node = self._record("parameter", (), name=param.name)
        self.parameters[param.name] = param
        self._param_nodes[param.name] = node
        return node

    def constant(self, value, name: Optional[str] = None) -> Node:
        """Leaf holding a fixed array."""
        return self._record("constant", (), name=name, data=np.asarray(value, dtype=np.float64))

    # -- primitive ops ----------------------------------------------------

    def matmul(self, a: Node, b: Node) -> Node:
        """Matrix product of two 2-D operands."""
        return self._record("matmul", (a, b))

    def add(self, a: Node, b: Node) -> Node:
        """Elementwise sum with numpy broadcasting (covers bias broadcast-add)."""
        return self._record("add", (a, b))

    def sub(self, a: Node, b: Node) -> Node:
        """Elementwise difference with broadcasting."""
        return self._record("sub", (a, b))

    def mul(self, a: Node, b: Node) -> Node:
        """Elementwise product with broadcasting."""
        return self._record("mul", (a, b))

    def scale(self, a: Node, factor: float) -> Node:
        """Multiply by a fixed scalar."""
        return self._record("scale", (a,), factor=float(factor))

    def neg(self, a: Node) -> Node:
        """Negation."""
        return self.scale(a, -1.0)

    def celu(self, a: Node, alpha: float = 1.0) -> Node:
        """CELU activation, convex and nondecreasing."""
        return self._record("celu", (a,), alpha=float(alpha))

    def nonneg(self, a: Node) -> Node:
        """Elementwise max(a, 0)."""
        return self._record("nonneg", (a,))

    def sigmoid(self, a: Node) -> Node:
        """Logistic sigmoid."""
        return self._record("sigmoid", (a,))

    def tanh(self, a: Node) -> Node:
        """Hyperbolic tangent."""
        return self._record("tanh", (a,))

    def row_max(self, a: Node) -> Node:
        """Max over axis 1 of a matrix, kept as a column; ties go to the lowest index."""
        return self._record("row_max", (a,))

    def mean(self, a: Node, axis: Optional[int] = None, keepdims: bool = False) -> Node:
        """Mean over ``axis`` (all elements when None)."""
        return self._record("reduce", (a,), kind="mean", axis=axis, keepdims=keepdims)

    def sum(self, a: Node, axis: Optional[int] = None, keepdims: bool = False) -> Node:
        """Sum over ``axis`` (all elements when None)."""
        return self._record("reduce", (a,), kind="sum", axis=axis, keepdims=keepdims)

    def transpose(self, a: Node) -> Node:
        """Transpose of a 2-D operand."""
        return self._record("transpose", (a,))

    def reshape(self, a: Node, shape: Sequence[int]) -> Node:
        """Reshape to a fixed ``shape``."""
        return self._record("reshape", (a,), shape=tuple(shape))

    def slice(self, a: Node, start: int, stop: int, axis: int = 1) -> Node:
        """Contiguous slice ``start:stop`` along ``axis``."""
        return self._record("slice", (a,), start=start, stop=stop, axis=axis)

    def concat(self, nodes: Sequence[Node], axis: int = 1) -> Node:
        """Concatenate along ``axis``; a single node is returned unchanged."""
        if len(nodes) == 1:
            return nodes[0]
        return self._record("concat", tuple(nodes), axis=axis)

    # -- evaluation -------------------------------------------------------

    def _check_finite(self, value: np.ndarray, what: str):
        if not np.all(np.isfinite(value)):
            raise NonFiniteError(f"non-finite values in {what} of graph '{self.name}'")

    def _leaf_value(self, node: Node, inputs: Mapping[str, Any]) -> np.ndarray:
        if node.op == "constant":
            return node.meta["data"]
        if node.op == "parameter":
            value = self.parameters[node.name].value
            self._check_finite(value, f"parameter '{node.name}'")
            return value
        if node.name not in inputs:
            raise GraphError(f"missing input '{node.name}' for graph '{self.name}'")
        value = np.asarray(inputs[node.name], dtype=np.float64)
        declared = node.meta["shape"]
        if declared is not None:
            if len(declared) != value.ndim or any(d is not None and d != s for d, s in zip(declared, value.shape)):
                raise ShapeError(f"{node!r}: expected shape {declared}, got {value.shape}")
        self._check_finite(value, f"input '{node.name}'")
        return value

    def forward(self, inputs: Optional[Mapping[str, Any]] = None, output: Optional[Node] = None) -> np.ndarray:
        """Evaluate every node in order and return the value of ``output`` (default: last node)."""
        inputs = inputs or {}
        self._evaluated = False
        for node in self.nodes:
            if not node.inputs:
                node.value = self._leaf_value(node, inputs)
                continue
            vals = [inp.value for inp in node.inputs]
            try:
                node.value = FORWARD[node.op](vals, node.meta)
            except ValueError as exc:
                shapes = ", ".join(str(v.shape) for v in vals)
                raise ShapeError(f"{node!r} with operand shapes {shapes}: {exc}") from exc
        self._evaluated = True
        if not self.nodes:
            raise GraphError(f"graph '{self.name}' is empty")
        return (output or self.nodes[-1]).value

    def backward(self, output: Optional[Node] = None, wrt: Optional[Iterable[str]] = None) -> Dict[str, np.ndarray]:
        """Gradients of a scalar ``output`` with respect to named parameters or placeholders.

        ``wrt`` defaults to every parameter in the graph.
        """
        if not self._evaluated:
            raise GraphError(f"backward called before forward on graph '{self.name}'")
        output = output or self.nodes[-1]
        if output.value.size != 1:
            raise GraphError(f"backward needs a scalar output, {output!r} has shape {output.value.shape}")

        names = list(self.parameters) if wrt is None else list(wrt)
        targets: Dict[str, Node] = {}
        for name in names:
            node = self._param_nodes.get(name) or self._placeholders.get(name)
            if node is None:
                raise GraphError(f"unknown gradient target '{name}'")
            targets[name] = node

        grads: Dict[int, np.ndarray] = {output.index: np.ones_like(output.value)}
        for node in reversed(self.nodes[: output.index + 1]):
            g = grads.get(node.index)
            if g is None or not node.inputs:
                continue
            vals = [inp.value for inp in node.inputs]
            for inp, gi in zip(node.inputs, VJP[node.op](g, vals, node.value, node.meta)):
                if inp.index in grads:
                    grads[inp.index] = grads[inp.index] + gi
                else:
                    grads[inp.index] = gi
        return {
            name: grads.get(node.index, np.zeros_like(node.value))
            for name, node in targets.items()
        }


def forward(graph: Graph, inputs: Mapping[str, Any], output: Optional[Node] = None) -> np.ndarray:
    """Functional form of :meth:`Graph.forward`."""
    return graph.forward(inputs, output)


def backward(graph: Graph, wrt: Optional[Iterable[str]] = None, output: Optional[Node] = None) -> Dict[str, np.ndarray]:
    """Functional form of :meth:`Graph.backward`."""
    return graph.backward(output, wrt)
