"""
Scalar objectives used by attacks and trainers.

Every function accepts logits of shape (C,) or a batch (N, C) together with a
label (or one label per row) and returns a Tensor holding one value per row.
When the logits are recorded on a Tape the result is differentiable.
"""
import math

import numpy as np

from core_nn import tensor as ops
from core_nn.errors import LabelError, ShapeError
from core_nn.tensor import ArrayLike, Tensor, as_tensor

LN2 = math.log(2.0)
SIMPLEX_TOLERANCE = 1e-12


def _check_labels(logits: Tensor, y) -> None:
    classes = logits.shape[-1]
    labels = np.asarray(y)
    if labels.dtype.kind not in 'iu':
        raise LabelError(f"labels must be integers, got dtype {labels.dtype}")
    if labels.size and (labels.min() < 0 or labels.max() >= classes):
        raise LabelError(f"label out of range for {classes} classes: {labels.tolist()}")


def _check_beta(beta: float) -> None:
    if beta < 0:
        raise ValueError(f"beta must be non-negative, got {beta}")


def is_simplex(values: ArrayLike, tolerance: float = SIMPLEX_TOLERANCE) -> bool:
    """True when every row is a probability vector within tolerance"""
    probs = as_tensor(values).data
    if probs.ndim == 0 or not np.all(np.isfinite(probs)):
        return False
    return bool(np.all(probs >= 0) and np.all(np.abs(probs.sum(axis=-1) - 1.0) <= tolerance))


def softmax(logits: ArrayLike) -> Tensor:
    return ops.exp(ops.log_softmax(logits))


def cross_entropy(logits: ArrayLike, y) -> Tensor:
    """-ln p_y with p = softmax(logits)"""
    logits = as_tensor(logits)
    _check_labels(logits, y)
    return ops.neg(ops.take(ops.log_softmax(logits), y))


def scaled_ce(logits: ArrayLike, y) -> Tensor:
    """Cross-entropy in bits; exceeds 1 whenever argmax(logits) != y strictly"""
    return cross_entropy(logits, y) / LN2


def _kl_terms(p_ref: Tensor, log_p_ref: Tensor, logits: Tensor) -> Tensor:
    # 0 * ln 0 := 0 falls out of the floored log
    return ops.reduce_sum(ops.mul(p_ref, ops.sub(log_p_ref, ops.log_softmax(logits))), axis=-1)


def kl_div(p_ref: ArrayLike, logits: ArrayLike) -> Tensor:
    """
    KL(p_ref || softmax(logits)), reference distribution first

    Args:
        p_ref: Reference probabilities, rows on the simplex
        logits: Scores of the compared distribution

    Returns:
        Non-negative divergence per row
    """
    p_ref, logits = as_tensor(p_ref), as_tensor(logits)
    if p_ref.shape != logits.shape:
        raise ShapeError(f"reference shape {p_ref.shape} does not match logits {logits.shape}")
    return _kl_terms(p_ref, ops.log(p_ref), logits)


def kl_from_logits(logits_ref: ArrayLike, logits: ArrayLike) -> Tensor:
    """KL(softmax(logits_ref) || softmax(logits)) without forming log(p_ref) from probabilities"""
    logits_ref, logits = as_tensor(logits_ref), as_tensor(logits)
    log_p_ref = ops.log_softmax(logits_ref)
    return _kl_terms(ops.exp(log_p_ref), log_p_ref, logits)


def cw_margin(logits: ArrayLike, y, kappa: float = 0.0) -> Tensor:
    """max(max_{i != y} z_i - z_y, -kappa)"""
    logits = as_tensor(logits)
    _check_labels(logits, y)
    if kappa < 0:
        raise ValueError(f"kappa must be non-negative, got {kappa}")
    margin = ops.sub(ops.masked_max(logits, y), ops.take(logits, y))
    return ops.maximum(margin, -kappa)


def bce_mart(logits: ArrayLike, y) -> Tensor:
    """-ln p_y - ln(1 - max_{k != y} p_k)"""
    logits = as_tensor(logits)
    _check_labels(logits, y)
    probs = softmax(logits)
    runner_up = ops.masked_max(probs, y)
    return ops.sub(cross_entropy(logits, y), ops.log(ops.sub(1.0, runner_up)))


def mart_loss(logits_adv: ArrayLike, logits_nat: ArrayLike, y, beta: float) -> Tensor:
    _check_beta(beta)
    logits_adv, logits_nat = as_tensor(logits_adv), as_tensor(logits_nat)
    _check_labels(logits_nat, y)
    weight = ops.sub(1.0, ops.take(softmax(logits_nat), y))
    regularizer = ops.mul(kl_from_logits(logits_nat, logits_adv), weight)
    return ops.add(bce_mart(logits_adv, y), ops.mul(regularizer, beta))


def trades_loss(logits_nat: ArrayLike, logits_adv: ArrayLike, y, beta: float) -> Tensor:
    _check_beta(beta)
    regularizer = kl_from_logits(logits_nat, logits_adv)
    return ops.add(cross_entropy(logits_nat, y), ops.mul(regularizer, beta))


def predict(logits: ArrayLike) -> np.ndarray:
    """Argmax along the last axis; ties resolve to the smallest index"""
    return np.argmax(as_tensor(logits).data, axis=-1)
