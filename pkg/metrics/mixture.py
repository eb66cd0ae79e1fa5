"""
Cross-over mixture measurement: PCA of hidden activations and a Fisher class-separation score.
"""
from dataclasses import dataclass
from typing import Dict

import numpy as np
from loguru import logger

from attacks.config import AttackConfig
from attacks.search import Seed
from core_nn.errors import ShapeError
from core_nn.network import ModelParams, forward
from data.dataset import Dataset
from metrics.evaluation import adversarial_set

MIXTURE_SOURCES = ('nat', 'A', 'B')


@dataclass(frozen=True, eq=False)
class Projection:
    """Top two principal axes of a point cloud and the cloud expressed in them"""

    components: np.ndarray
    mean: np.ndarray
    variances: np.ndarray
    projected: np.ndarray


@dataclass(frozen=True, eq=False)
class MixtureReport:
    components: np.ndarray
    projected: np.ndarray
    labels: np.ndarray
    fisher_score: float


@dataclass(frozen=True, eq=False)
class MixtureResult:
    """Reports for the natural set and both attacked sets, keyed by source"""

    reports: Dict[str, MixtureReport]
    layer: int

    @property
    def fisher_a(self) -> float:
        return self.reports['A'].fisher_score

    @property
    def fisher_b(self) -> float:
        return self.reports['B'].fisher_score


def pca2(vectors) -> Projection:
    """
    Project vectors onto the two leading eigenvectors of their covariance

    Axes are ordered by decreasing eigenvalue and signed so that their largest
    entry is positive.

    Args:
        vectors: N x D array, N >= 2 and D >= 2

    Returns:
        Projection with orthonormal components (2 x D)
    """
    data = np.asarray(vectors, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] < 2:
        raise ShapeError(f"pca2 needs vectors of dimension >= 2, got shape {data.shape}")
    if data.shape[0] < 2:
        raise ValueError(f"pca2 needs at least two vectors, got {data.shape[0]}")

    mean = data.mean(axis=0)
    centered = data - mean
    covariance = centered.T @ centered / (data.shape[0] - 1)
    eigenvalues, eigenvectors = np.linalg.eigh(covariance)
    order = np.argsort(eigenvalues)[::-1][:2]
    components = eigenvectors[:, order].T
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1
    return Projection(components=components, mean=mean, variances=np.maximum(eigenvalues[order], 0.0),
                      projected=centered @ components.T)


def fisher_separation(points, labels) -> float:
    """Trace of between-class scatter over trace of within-class scatter"""
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if classes.size < 2:
        raise ValueError("fisher separation needs at least two classes")

    overall = points.mean(axis=0)
    between = within = 0.0
    for label in classes:
        members = points[labels == label]
        center = members.mean(axis=0)
        between += len(members) * float(np.sum((center - overall) ** 2))
        within += float(np.sum((members - center) ** 2))
    if within == 0.0:
        return 0.0 if between == 0.0 else float('inf')
    return between / within


def _layer_index(params: ModelParams, layer: int) -> int:
    hidden = params.spec.hidden_layers
    if hidden == 0:
        raise ShapeError("the network has no hidden layer to inspect")
    if not -hidden <= layer < hidden:
        raise ShapeError(f"layer {layer} out of range for {hidden} hidden layers")
    return layer % hidden


def mixture_report(params: ModelParams, dataset: Dataset, layer: int) -> MixtureReport:
    activations = forward(params, dataset.features).hidden[_layer_index(params, layer)]
    projection = pca2(activations)
    return MixtureReport(components=projection.components, projected=projection.projected,
                         labels=dataset.labels.copy(),
                         fisher_score=fisher_separation(projection.projected, dataset.labels))


def mixture_experiment(params: ModelParams, dataset: Dataset, attack_a: AttackConfig, attack_b: AttackConfig,
                       layer: int = -1, seed: Seed = 0, threads: int = 1) -> MixtureResult:
    """
    Compare how mixed two adversarial sets look in a hidden layer

    Both attacks draw the same per-example seeds, so identical configs give identical scores.

    Args:
        params: Network parameters
        dataset: Natural examples
        attack_a: First attack (e.g. PGD-20)
        attack_b: Second attack (e.g. PGD-20-0)
        layer: Hidden layer index, negative counts from the last
        seed: Base seed for both attacks
        threads: Attack workers

    Returns:
        MixtureResult with nat, A and B reports
    """
    index = _layer_index(params, layer)
    reports = {'nat': mixture_report(params, dataset, index)}
    for source, attack in (('A', attack_a), ('B', attack_b)):
        reports[source] = mixture_report(params, adversarial_set(params, dataset, attack, seed, threads), index)
    logger.info(f"Fisher separation at hidden layer {index}: nat {reports['nat'].fisher_score:.4f}, "
                f"A {reports['A'].fisher_score:.4f}, B {reports['B'].fisher_score:.4f}")
    return MixtureResult(reports=reports, layer=index)
