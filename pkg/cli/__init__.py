"""
CLI package initialization.
"""
from cli.commands import (
    EXIT_FAILED,
    EXIT_INVALID,
    EXIT_OK,
    cmd_bound_check,
    cmd_eval,
    cmd_mixture,
    cmd_sweep_epsilon,
    cmd_sweep_tau,
    cmd_train,
    run_experiment,
)
from cli.experiment import DatasetSpec, EvaluationSpec, ExperimentConfig, load_experiment

__all__ = [
    'EXIT_FAILED', 'EXIT_INVALID', 'EXIT_OK', 'DatasetSpec', 'EvaluationSpec', 'ExperimentConfig',
    'cmd_bound_check', 'cmd_eval', 'cmd_mixture', 'cmd_sweep_epsilon', 'cmd_sweep_tau', 'cmd_train',
    'load_experiment', 'run_experiment',
]
