"""
Exhaustive lattice search over the epsilon-ball of low-dimensional inputs.
"""
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from attacks.config import DomainBox
from attacks.search import clip_to_box
from core_nn.errors import ShapeError
from core_nn.network import ModelParams, forward
from losses import objectives

MAX_GRID_DIM = 3

GridLoss = Literal['ce', 'scaled_ce', 'cw']


@dataclass(frozen=True, eq=False)
class GridResult:
    """Worst lattice point plus the full evaluation record"""

    worst_point: np.ndarray
    worst_loss: float
    any_misclassified: bool
    points: np.ndarray
    losses: np.ndarray
    misclassified: np.ndarray
    evaluations: int


def lattice(x, epsilon: float, resolution: int) -> np.ndarray:
    """All resolution**d nodes of the ball around x; the center is a node"""
    x = np.asarray(x, dtype=np.float64)
    if epsilon == 0:
        return x[None, :].copy()
    axis = np.linspace(-epsilon, epsilon, resolution)
    axis[resolution // 2] = 0.0
    offsets = np.stack(np.meshgrid(*([axis] * x.size), indexing='ij'), axis=-1).reshape(-1, x.size)
    return x + offsets


def _grid_losses(loss: GridLoss, logits: np.ndarray, y: int, kappa: float) -> np.ndarray:
    if loss == 'ce':
        return objectives.cross_entropy(logits, y).data
    if loss == 'scaled_ce':
        return objectives.scaled_ce(logits, y).data
    if loss == 'cw':
        return objectives.cw_margin(logits, y, kappa).data
    raise ValueError(f"unknown grid loss: {loss}")


def grid_attack(params: ModelParams, x, y: int, epsilon: float, resolution: int = 21,
                loss: GridLoss = 'ce', domain_box: Optional[DomainBox] = None,
                kappa: float = 0.0) -> GridResult:
    """
    Evaluate loss and misclassification on every lattice node of the ball

    Args:
        params: Network parameters
        x: Ball center, at most 3-dimensional
        y: Label
        epsilon: Ball radius
        resolution: Nodes per axis, odd so that x itself is evaluated
        loss: Loss to maximize
        domain_box: Optional box the nodes are clipped into
        kappa: Margin floor for the cw loss

    Returns:
        GridResult with the argmax node
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size != params.spec.input_dim:
        raise ShapeError(f"point of shape {x.shape} does not match input dim {params.spec.input_dim}")
    if x.size > MAX_GRID_DIM:
        raise ShapeError(f"grid search is limited to {MAX_GRID_DIM} dimensions, got {x.size}")
    if resolution < 1 or resolution % 2 == 0:
        raise ValueError(f"resolution must be a positive odd number, got {resolution}")
    if epsilon < 0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon}")

    nodes = lattice(x, epsilon, resolution)
    evaluations = len(nodes)
    nodes = clip_to_box(nodes, domain_box)

    logits = forward(params, nodes).logits
    losses = _grid_losses(loss, logits, y, kappa)
    misclassified = objectives.predict(logits) != y
    worst = int(np.argmax(losses))
    return GridResult(worst_point=nodes[worst], worst_loss=float(losses[worst]),
                      any_misclassified=bool(misclassified.any()), points=nodes, losses=losses,
                      misclassified=misclassified, evaluations=evaluations)
