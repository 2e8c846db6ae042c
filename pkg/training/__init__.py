"""Dual-objective training of the potential model"""

from .loss import LossGraph, NonFiniteScoreError, build_loss, loss_and_grads, loss_L1
from .trainer import (
    EpochRecord,
    RestartResult,
    TrainConfig,
    TrainingAborted,
    TrainResult,
    held_out_batch,
    multi_restart_train,
    train,
)

__all__ = [
    'EpochRecord',
    'LossGraph',
    'NonFiniteScoreError',
    'RestartResult',
    'TrainConfig',
    'TrainResult',
    'TrainingAborted',
    'build_loss',
    'held_out_batch',
    'loss_L1',
    'loss_and_grads',
    'multi_restart_train',
    'train',
]
