"""Autoregressive pinball-loss baseline sampler"""

from .autoregressive import AutoRegChain, AutoRegConfig, chain_monotonicity, sample_autoregressive, train_autoregressive
from .pinball import PinballNet, crps_graph, crps_mc_loss, pinball_loss, pinball_node, quantile_monotonicity, repeat_rows

__all__ = [
    'AutoRegChain',
    'AutoRegConfig',
    'PinballNet',
    'chain_monotonicity',
    'crps_graph',
    'crps_mc_loss',
    'pinball_loss',
    'pinball_node',
    'quantile_monotonicity',
    'repeat_rows',
    'sample_autoregressive',
    'train_autoregressive',
]
