"""
Training package initialization.
"""
from training.config import DEFAULT_BETA, Method, Schedule, TrainConfig, schedule_lookup
from training.optim import sgd_momentum_step, zero_velocity
from training.trainer import METRIC_COLUMNS, EpochStats, batch_objective, param_objective, train

__all__ = [
    'DEFAULT_BETA', 'METRIC_COLUMNS', 'EpochStats', 'Method', 'Schedule', 'TrainConfig',
    'batch_objective', 'param_objective', 'schedule_lookup', 'sgd_momentum_step', 'train', 'zero_velocity',
]
