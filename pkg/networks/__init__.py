"""Learnable functions of the potential psi(u, x) = phi(u) + b(u)^T f(x)"""

from .features import (
    DeepSetNet,
    FeatureMap,
    IdentityStatistics,
    LstmNet,
    ManualStatistics,
    MeanStatistics,
    MlpStatistics,
    feature_forward,
    observation_batch,
)
from .icnn import Icnn
from .layers import Dense, Mlp, uniform_init
from .potential import (
    NetworkConfig,
    PotentialModel,
    QuadraticPotential,
    SourceSupportError,
    check_in_ball,
    potential_eval,
    potential_grad_u,
)

__all__ = [
    'Dense',
    'DeepSetNet',
    'FeatureMap',
    'Icnn',
    'IdentityStatistics',
    'LstmNet',
    'ManualStatistics',
    'MeanStatistics',
    'Mlp',
    'MlpStatistics',
    'NetworkConfig',
    'PotentialModel',
    'QuadraticPotential',
    'SourceSupportError',
    'check_in_ball',
    'feature_forward',
    'observation_batch',
    'potential_eval',
    'potential_grad_u',
    'uniform_init',
]
