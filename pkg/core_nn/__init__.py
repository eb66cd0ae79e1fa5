"""
Core network package initialization.
"""
from core_nn.checkpoint import load_checkpoint, save_checkpoint
from core_nn.errors import (
    BoundViolationError,
    CheckpointError,
    ConfigError,
    DatasetError,
    LabelError,
    LabError,
    NonFiniteError,
    ShapeError,
    TrainingDivergedError,
)
from core_nn.gradcheck import finite_diff, param_finite_diff, relative_error
from core_nn.network import (
    ForwardRecord,
    InputObjective,
    MlpSpec,
    ModelParams,
    ParamGradients,
    ParamObjective,
    forward,
    grad_input,
    grad_params,
    init_params,
    input_loss,
    objective_loss,
    predict,
    value_and_grad_input,
)
from core_nn.tensor import Tape, Tensor

__all__ = [
    'BoundViolationError', 'CheckpointError', 'ConfigError', 'DatasetError', 'LabelError',
    'LabError', 'NonFiniteError', 'ShapeError', 'TrainingDivergedError',
    'ForwardRecord', 'InputObjective', 'MlpSpec', 'ModelParams', 'ParamGradients', 'ParamObjective',
    'Tape', 'Tensor',
    'finite_diff', 'forward', 'grad_input', 'grad_params', 'init_params', 'input_loss',
    'load_checkpoint', 'objective_loss', 'param_finite_diff', 'predict', 'relative_error',
    'save_checkpoint', 'value_and_grad_input',
]
