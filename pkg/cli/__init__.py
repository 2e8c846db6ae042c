"""Config-driven experiment runner"""

from .commands import (
    cmd_eval,
    cmd_reproduce,
    cmd_sample,
    cmd_train,
    evaluate_metrics,
    pseudo_observation,
    resolve_observation,
    setup_commands,
)
from .config import (
    ConfigError,
    ExperimentConfig,
    apply_full_scale,
    load_config,
    parse_config,
    with_seed,
)

__all__ = [
    'ConfigError',
    'ExperimentConfig',
    'apply_full_scale',
    'cmd_eval',
    'cmd_reproduce',
    'cmd_sample',
    'cmd_train',
    'evaluate_metrics',
    'load_config',
    'parse_config',
    'pseudo_observation',
    'resolve_observation',
    'setup_commands',
    'with_seed',
]
