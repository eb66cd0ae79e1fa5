"""
Losses package initialization.
"""
from losses.objectives import (
    bce_mart,
    cross_entropy,
    cw_margin,
    is_simplex,
    kl_div,
    kl_from_logits,
    mart_loss,
    predict,
    scaled_ce,
    softmax,
    trades_loss,
)

__all__ = [
    'bce_mart', 'cross_entropy', 'cw_margin', 'is_simplex', 'kl_div', 'kl_from_logits',
    'mart_loss', 'predict', 'scaled_ce', 'softmax', 'trades_loss',
]
