"""
Standard and robust accuracy, preset tables and backward-pass trend statistics.
"""
from typing import Dict, List, Optional, Sequence

import numpy as np
from loguru import logger
from scipy.stats import spearmanr

from attacks.config import AttackConfig, preset
from attacks.search import Seed, attack_batch, example_seeds, stack_outcomes
from core_nn.errors import DatasetError
from core_nn.network import ModelParams, predict
from data.dataset import Dataset


def _require_examples(dataset: Dataset) -> None:
    if len(dataset) == 0:
        raise DatasetError("cannot evaluate on an empty dataset")


def accuracy(params: ModelParams, dataset: Dataset) -> float:
    """Fraction of examples whose argmax prediction equals the label"""
    _require_examples(dataset)
    return float(np.mean(predict(params, dataset.features) == dataset.labels))


def adversarial_set(params: ModelParams, dataset: Dataset, attack: AttackConfig, seed: Seed = 0,
                    threads: int = 1) -> Dataset:
    """The dataset with every feature row replaced by its attacked counterpart"""
    _require_examples(dataset)
    outcomes = attack_batch(params, dataset.features, dataset.labels, attack,
                            example_seeds(seed, len(dataset)), threads=threads)
    x_adv, _ = stack_outcomes(outcomes)
    return Dataset(x_adv, dataset.labels, dataset.class_count, dataset.domain_box)


def robust_accuracy(params: ModelParams, dataset: Dataset, attack: AttackConfig, seed: Seed = 0,
                    threads: int = 1) -> float:
    """
    Fraction still classified correctly after the configured attack

    Args:
        params: Network parameters
        dataset: Natural examples
        attack: Attack applied to every example
        seed: Base seed, extended by the example index
        threads: Attack workers

    Returns:
        Robust accuracy in [0, 1]
    """
    _require_examples(dataset)
    outcomes = attack_batch(params, dataset.features, dataset.labels, attack,
                            example_seeds(seed, len(dataset)), threads=threads)
    return float(np.mean([not outcome.misclassified_at_exit for outcome in outcomes]))


def evaluate_presets(params: ModelParams, dataset: Dataset, presets: Sequence[str], epsilon: float,
                     seed: Seed = 0, threads: int = 1, alpha: Optional[float] = None) -> List[Dict]:
    """
    Standard and robust accuracy under every named attack preset

    Returns:
        One row per preset with attack, epsilon, standard_acc, robust_acc
    """
    standard = accuracy(params, dataset)
    rows = []
    for name in presets:
        attack = preset(name, epsilon, alpha=alpha, domain_box=dataset.domain_box)
        robust = robust_accuracy(params, dataset, attack, seed=seed, threads=threads)
        logger.info(f"{name} @ eps={epsilon}: standard {standard:.4f}, robust {robust:.4f}")
        rows.append({'attack': name, 'epsilon': epsilon, 'standard_acc': standard, 'robust_acc': robust})
    return rows


def bp_trend(mean_backward_passes: Sequence[float]) -> float:
    """Spearman correlation between epoch index and mean backward passes; 0 when undefined"""
    values = np.asarray(mean_backward_passes, dtype=np.float64)
    if values.size < 2 or np.all(values == values[0]):
        return 0.0
    rho = spearmanr(np.arange(values.size), values).correlation
    return float(rho) if np.isfinite(rho) else 0.0
