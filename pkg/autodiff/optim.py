"""Adam optimizer and the epoch-wise learning-rate schedule"""

from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

import numpy as np

from .graph import NonFiniteError


class NonFiniteGradientError(NonFiniteError):
    """Gradient with NaN or Inf entries"""

    def __init__(self, parameter: str):
        super().__init__(f"non-finite gradient for parameter '{parameter}'")
        self.parameter = parameter


@dataclass
class AdamState:
    """Moment estimates and step count, keyed by parameter name."""
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError(f"learning rate must be positive, got {self.lr}")


def lr_schedule(epoch: int, base_lr: float = 0.01, decay: float = 0.99) -> float:
    """Learning rate for ``epoch`` (0-based): ``base_lr * decay**epoch``."""
    if epoch < 0:
        raise ValueError(f"epoch must be >= 0, got {epoch}")
    return base_lr * decay ** epoch


def adam_step(
    state: AdamState,
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
) -> Tuple[Dict[str, np.ndarray], AdamState]:
    """One bias-corrected Adam update.

    Returns new parameter arrays; ``state`` is advanced in place and returned.
    """
    for name, value in params.items():
        if name not in grads:
            raise KeyError(f"no gradient for parameter '{name}'")
        if grads[name].shape != value.shape:
            raise ValueError(f"gradient shape {grads[name].shape} != parameter shape {value.shape} for '{name}'")
        if not np.all(np.isfinite(grads[name])):
            raise NonFiniteGradientError(name)

    state.t += 1
    correction1 = 1.0 - state.beta1 ** state.t
    correction2 = 1.0 - state.beta2 ** state.t
    updated = {}
    for name, value in params.items():
        g = grads[name]
        m = state.beta1 * state.m.get(name, np.zeros_like(value)) + (1.0 - state.beta1) * g
        v = state.beta2 * state.v.get(name, np.zeros_like(value)) + (1.0 - state.beta2) * g * g
        state.m[name], state.v[name] = m, v
        m_hat = m / correction1
        v_hat = v / correction2
        updated[name] = value - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return updated, state
