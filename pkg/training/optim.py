"""
SGD with momentum and coupled weight decay.
"""
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core_nn.errors import ShapeError
from core_nn.network import ModelParams


def zero_velocity(params: ModelParams) -> List[np.ndarray]:
    return [np.zeros_like(array) for array in params.arrays()]


def sgd_momentum_step(params: ModelParams, grads: Sequence[np.ndarray], velocity: Optional[Sequence[np.ndarray]],
                      lr: float, momentum: float, weight_decay: float) -> Tuple[ModelParams, List[np.ndarray]]:
    """
    One optimizer step: v' = momentum * v + (g + weight_decay * p), p' = p - lr * v'

    Args:
        params: Current parameters (left untouched)
        grads: Gradients in manifest order
        velocity: Previous velocity, zeros when None
        lr: Learning rate
        momentum: Momentum coefficient in [0, 1)
        weight_decay: L2 coefficient added to the gradient

    Returns:
        New parameters and new velocity
    """
    arrays = params.arrays()
    if velocity is None:
        velocity = zero_velocity(params)
    if len(grads) != len(arrays) or len(velocity) != len(arrays):
        raise ShapeError(f"{len(arrays)} parameter tensors but {len(grads)} gradients and {len(velocity)} velocities")

    new_arrays, new_velocity = [], []
    for name, p, g, v in zip(params.names(), arrays, grads, velocity):
        g = np.asarray(g, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        if g.shape != p.shape or v.shape != p.shape:
            raise ShapeError(f"{name}: parameter {p.shape}, gradient {g.shape}, velocity {v.shape}")
        v_next = momentum * v + (g + weight_decay * p)
        new_velocity.append(v_next)
        new_arrays.append(p - lr * v_next)
    return params.replace(new_arrays), new_velocity
