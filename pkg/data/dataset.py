"""
Labeled feature vectors, mini-batch iteration and splitting.
"""
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger
from sklearn.model_selection import train_test_split

from attacks.config import DomainBox
from core_nn.errors import DatasetError


@dataclass(frozen=True, eq=False)
class Dataset:
    """N feature rows of width d with labels in {0, ..., C-1}"""

    features: np.ndarray
    labels: np.ndarray
    class_count: int
    domain_box: Optional[DomainBox] = None

    def __post_init__(self):
        features = np.array(self.features, dtype=np.float64, copy=True)
        labels = np.array(self.labels, copy=True)
        if features.ndim != 2:
            raise DatasetError(f"features must be an N x d matrix, got shape {features.shape}")
        if labels.shape != (features.shape[0],):
            raise DatasetError(f"{features.shape[0]} feature rows but labels of shape {labels.shape}")
        if labels.size and labels.dtype.kind not in 'iu':
            raise DatasetError(f"labels must be integers, got dtype {labels.dtype}")
        labels = labels.astype(np.int64)
        if self.class_count < 2:
            raise DatasetError(f"class_count must be at least 2, got {self.class_count}")
        if labels.size and (labels.min() < 0 or labels.max() >= self.class_count):
            raise DatasetError(f"labels must lie in 0..{self.class_count - 1}")
        if not np.all(np.isfinite(features)):
            raise DatasetError("features contain non-finite values")
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, 'features', features)
        object.__setattr__(self, 'labels', labels)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[indices], self.labels[indices], self.class_count, self.domain_box)


def batches(dataset: Dataset, batch_size: int, epoch: int, seed: int, shuffle: bool = True) -> List[np.ndarray]:
    """
    Partition the example indices into mini-batches

    Args:
        dataset: Dataset to iterate
        batch_size: Examples per batch; the last batch may be short
        epoch: Epoch number, mixed into the permutation seed
        seed: Run seed
        shuffle: Identity order when False

    Returns:
        Index arrays covering every example exactly once
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be at least 1, got {batch_size}")
    n = len(dataset)
    order = np.random.default_rng([seed, epoch]).permutation(n) if shuffle else np.arange(n)
    return [order[start:start + batch_size] for start in range(0, n, batch_size)]


def split(dataset: Dataset, test_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """Stratified train/test split"""
    if not 0 < test_fraction < 1:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    train_idx, test_idx = train_test_split(
        np.arange(len(dataset)), test_size=test_fraction, random_state=seed, stratify=dataset.labels)
    logger.info(f"Split {len(dataset)} examples into {len(train_idx)} train / {len(test_idx)} test")
    return dataset.subset(np.sort(train_idx)), dataset.subset(np.sort(test_idx))
