"""
Central finite differences, the oracle for the reverse-mode engine.
"""
from typing import Callable, List

import numpy as np

from core_nn.network import ModelParams


def finite_diff(fn: Callable[[np.ndarray], float], point, h: float = 1e-5) -> np.ndarray:
    """
    Central-difference gradient estimate, one coordinate at a time

    Args:
        fn: Scalar-valued function of an array
        point: Where to differentiate
        h: Half-width of the difference stencil

    Returns:
        Estimate shaped like point
    """
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    base = np.array(point, dtype=np.float64, copy=True)
    grad = np.zeros_like(base)
    flat, grad_flat = base.reshape(-1), grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        upper = float(fn(base.copy()))
        flat[i] = original - h
        lower = float(fn(base.copy()))
        flat[i] = original
        grad_flat[i] = (upper - lower) / (2.0 * h)
    return grad


def param_finite_diff(params: ModelParams, fn: Callable[[ModelParams], float],
                      h: float = 1e-5) -> List[np.ndarray]:
    """Finite-difference gradient of fn(params) for every parameter tensor"""
    arrays = params.arrays()
    grads = []
    for position, array in enumerate(arrays):
        def perturbed(value: np.ndarray, position=position) -> float:
            trial = list(arrays)
            trial[position] = value
            return fn(params.replace(trial))
        grads.append(finite_diff(perturbed, array, h))
    return grads


def relative_error(estimate, reference, floor: float = 1e-8) -> float:
    """Largest absolute deviation scaled by the largest magnitude involved"""
    a = np.asarray(estimate, dtype=np.float64)
    b = np.asarray(reference, dtype=np.float64)
    scale = max(np.max(np.abs(a), initial=0.0), np.max(np.abs(b), initial=0.0), floor)
    return float(np.max(np.abs(a - b), initial=0.0) / scale)
