"""
CSV persistence for datasets: header f0..f{d-1},label, one example per line.
"""
import math
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd
from loguru import logger

from attacks.config import DomainBox
from core_nn.errors import DatasetError
from data.dataset import Dataset

LABEL_COLUMN = 'label'


def feature_columns(dim: int):
    return [f"f{i}" for i in range(dim)]


def save_csv(dataset: Dataset, path: Union[str, Path]) -> Path:
    """Write the dataset so that load_csv reproduces every float bit for bit"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(dataset.features, columns=feature_columns(dataset.dim))
    frame[LABEL_COLUMN] = dataset.labels
    frame.to_csv(path, index=False, float_format='%.17g', lineterminator='\n')
    logger.info(f"Wrote {len(dataset)} examples to {path}")
    return path


def _parse_float(value: str, line: int, column: str, path: Path) -> float:
    try:
        parsed = float(value)
    except ValueError:
        raise DatasetError(f"{path}: line {line}: column {column} is not a number: {value!r}") from None
    if not math.isfinite(parsed):
        raise DatasetError(f"{path}: line {line}: column {column} is not finite: {value!r}")
    return parsed


def _parse_label(value: str, line: int, path: Path) -> int:
    try:
        return int(value.strip())
    except ValueError:
        raise DatasetError(f"{path}: line {line}: label is not an integer: {value!r}") from None


def load_csv(path: Union[str, Path], class_count: Optional[int] = None,
             domain_box: Optional[DomainBox] = None) -> Dataset:
    """
    Read a dataset written by save_csv or by hand

    Args:
        path: CSV file
        class_count: Number of classes; max label + 1 when omitted
        domain_box: Optional box to attach

    Returns:
        Dataset

    Raises:
        DatasetError: Missing file, bad header or a malformed line (reported with its line number)
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"dataset file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=False)
    except pd.errors.ParserError as e:
        raise DatasetError(f"{path}: {e}") from e
    except pd.errors.EmptyDataError:
        raise DatasetError(f"{path}: file is empty") from None

    columns = list(frame.columns)
    if len(columns) < 2 or columns[-1] != LABEL_COLUMN or columns[:-1] != feature_columns(len(columns) - 1):
        raise DatasetError(f"{path}: header must read f0,...,f{{d-1}},{LABEL_COLUMN}, got {','.join(columns)}")
    features_cols = columns[:-1]

    features, labels = [], []
    for index, row in enumerate(frame.itertuples(index=False, name=None)):
        line = index + 2
        if all(pd.isna(value) or value == '' for value in row):
            continue
        if any(pd.isna(value) for value in row):
            raise DatasetError(f"{path}: line {line}: expected {len(columns)} fields")
        features.append([_parse_float(value, line, col, path) for value, col in zip(row[:-1], features_cols)])
        labels.append(_parse_label(row[-1], line, path))
    features = np.array(features, dtype=np.float64).reshape(len(labels), len(features_cols))
    labels = np.array(labels, dtype=np.int64)

    if labels.size and labels.min() < 0:
        raise DatasetError(f"{path}: labels must be non-negative")
    if class_count is None:
        class_count = max(int(labels.max()) + 1, 2) if labels.size else 2
    logger.info(f"Loaded {len(labels)} examples of dim {len(features_cols)} from {path}")
    return Dataset(features, labels, class_count=class_count, domain_box=domain_box)
