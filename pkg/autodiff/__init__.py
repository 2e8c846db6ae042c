"""Dense reverse-mode autodiff and optimizer for vqsbi"""

from .graph import (
    Graph,
    GraphError,
    Node,
    NonFiniteError,
    Parameter,
    ShapeError,
    backward,
    forward,
)
from .optim import AdamState, NonFiniteGradientError, adam_step, lr_schedule

__all__ = [
    'Graph',
    'GraphError',
    'Node',
    'NonFiniteError',
    'NonFiniteGradientError',
    'Parameter',
    'ShapeError',
    'AdamState',
    'adam_step',
    'backward',
    'forward',
    'lr_schedule',
]
