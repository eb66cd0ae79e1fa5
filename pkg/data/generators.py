"""
Seeded synthetic classification tasks.
"""
from typing import Optional, Sequence

import numpy as np
from loguru import logger

from attacks.config import DomainBox
from core_nn.errors import DatasetError
from data.dataset import Dataset

SPIRAL_T_MIN = 0.15


def gen_gaussians(n_per_class: int, centers: Sequence[Sequence[float]], sigma: float, seed: int,
                  domain_box: Optional[DomainBox] = None) -> Dataset:
    """
    Isotropic Gaussian blobs, one class per center

    Args:
        n_per_class: Points drawn around every center
        centers: One d-vector per class
        sigma: Noise standard deviation
        seed: Generator seed
        domain_box: Optional box declared on the dataset

    Returns:
        Dataset with classes in center order
    """
    centers = np.asarray(centers, dtype=np.float64)
    if centers.ndim != 2 or centers.shape[0] < 2:
        raise DatasetError(f"need at least two d-dimensional centers, got shape {centers.shape}")
    if not sigma > 0:
        raise DatasetError(f"sigma must be positive, got {sigma}")
    if n_per_class < 1:
        raise DatasetError(f"n_per_class must be positive, got {n_per_class}")

    rng = np.random.default_rng(seed)
    features = np.concatenate([c + sigma * rng.standard_normal((n_per_class, centers.shape[1]))
                               for c in centers])
    labels = np.repeat(np.arange(len(centers)), n_per_class)
    logger.info(f"Generated {len(labels)} gaussian samples in {centers.shape[1]} dims, {len(centers)} classes")
    return Dataset(features, labels, class_count=len(centers), domain_box=domain_box)


def spiral_point(t, label: int, turns: float, radius: float) -> np.ndarray:
    """Noise-free point of spiral `label` at curve parameter t"""
    t = np.asarray(t, dtype=np.float64)
    angle = 2.0 * np.pi * turns * t + np.pi * label
    return np.stack([radius * t * np.cos(angle), radius * t * np.sin(angle)], axis=-1)


def gen_spirals(n_per_class: int, turns: float, noise: float, seed: int, radius: float = 4.0) -> Dataset:
    """
    Two interleaved spirals; class 1 is class 0 rotated by pi

    Args:
        n_per_class: Points per spiral
        turns: Revolutions of each arm
        noise: Standard deviation of the radial noise
        seed: Generator seed
        radius: Radius reached at the end of each arm

    Returns:
        Two-class dataset in 2 dims
    """
    if not turns > 0:
        raise DatasetError(f"turns must be positive, got {turns}")
    if noise < 0:
        raise DatasetError(f"noise must be non-negative, got {noise}")

    rng = np.random.default_rng(seed)
    rows = []
    for label in (0, 1):
        t = rng.uniform(SPIRAL_T_MIN, 1.0, n_per_class)
        points = spiral_point(t, label, turns, radius)
        if noise > 0:
            stretch = 1.0 + noise * rng.standard_normal(n_per_class) / (radius * t)
            points = points * stretch[:, None]
        rows.append(points)
    labels = np.repeat([0, 1], n_per_class)
    logger.info(f"Generated {2 * n_per_class} spiral samples with {turns} turns")
    return Dataset(np.concatenate(rows), labels, class_count=2)
