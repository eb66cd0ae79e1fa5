"""
Empirical risk decomposition and the upper-bound check, both against the grid attacker.
"""
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from joblib import Parallel, delayed
from loguru import logger

from attacks.grid import GridResult, grid_attack
from core_nn.errors import BoundViolationError, DatasetError
from core_nn.network import ModelParams, forward
from data.dataset import Dataset
from losses import objectives


@dataclass(frozen=True)
class RiskReport:
    """
    Natural, boundary and robust risk over a finite sample

    Counts are kept alongside the fractions so the decomposition identity is
    checked on integers. rhs_bound and rho are None for a bare decomposition.
    """

    epsilon: float
    examples: int
    n_nat: int
    n_bdy: int
    n_rob: int
    rhs_bound: Optional[float] = None
    rho: Optional[float] = None

    @property
    def r_nat(self) -> float:
        return self.n_nat / self.examples

    @property
    def r_bdy(self) -> float:
        return self.n_bdy / self.examples

    @property
    def r_rob(self) -> float:
        return self.n_rob / self.examples

    @property
    def decomposition_holds(self) -> bool:
        return self.n_rob == self.n_nat + self.n_bdy

    @property
    def bound_holds(self) -> bool:
        return self.rhs_bound is None or self.r_rob <= self.rhs_bound

    def as_row(self) -> dict:
        return {'epsilon': self.epsilon, 'rho': self.rho, 'r_nat': self.r_nat, 'r_bdy': self.r_bdy,
                'r_rob': self.r_rob, 'rhs_bound': self.rhs_bound,
                'decomposition_holds': self.decomposition_holds, 'bound_holds': self.bound_holds}


@dataclass(frozen=True, eq=False)
class _PointScan:
    natural_wrong: bool
    natural_loss: float
    grid: GridResult


def _scan(params: ModelParams, dataset: Dataset, epsilon: float, resolution: int, threads: int) -> List[_PointScan]:
    if len(dataset) == 0:
        raise DatasetError("cannot measure risk on an empty dataset")
    logits = forward(params, dataset.features).logits
    wrong = objectives.predict(logits) != dataset.labels
    natural_loss = objectives.scaled_ce(logits, dataset.labels).data

    def one(i: int) -> GridResult:
        return grid_attack(params, dataset.features[i], int(dataset.labels[i]), epsilon, resolution,
                           loss='scaled_ce', domain_box=dataset.domain_box)

    if threads > 1:
        grids = Parallel(n_jobs=threads, prefer='threads')(delayed(one)(i) for i in range(len(dataset)))
    else:
        grids = [one(i) for i in range(len(dataset))]
    return [_PointScan(bool(w), float(l), g) for w, l, g in zip(wrong, natural_loss, grids)]


def _counts(scans: List[_PointScan]):
    n_nat = sum(scan.natural_wrong for scan in scans)
    n_bdy = sum((not scan.natural_wrong) and scan.grid.any_misclassified for scan in scans)
    n_rob = sum(scan.natural_wrong or scan.grid.any_misclassified for scan in scans)
    return n_nat, n_bdy, n_rob


def risk_decomposition(params: ModelParams, dataset: Dataset, epsilon: float, resolution: int = 21,
                       threads: int = 1) -> RiskReport:
    """
    Split robust risk into natural and boundary risk with the grid attacker

    Args:
        params: Network parameters
        dataset: Sample of at most 3-dimensional points
        epsilon: Ball radius
        resolution: Lattice nodes per axis (odd)
        threads: Grid workers

    Returns:
        RiskReport without a bound
    """
    n_nat, n_bdy, n_rob = _counts(_scan(params, dataset, epsilon, resolution, threads))
    return RiskReport(epsilon=epsilon, examples=len(dataset), n_nat=n_nat, n_bdy=n_bdy, n_rob=n_rob)


def friendly_loss(grid: GridResult, rho: float) -> float:
    """min surrogate over misclassified nodes plus rho, else max surrogate over the ball"""
    if grid.any_misclassified:
        return float(np.min(grid.losses[grid.misclassified])) + rho
    return float(np.max(grid.losses))


def theorem1_check(params: ModelParams, dataset: Dataset, epsilon: float, rho: float, resolution: int = 21,
                   threads: int = 1) -> RiskReport:
    """
    Robust risk against its surrogate upper bound

    The bound is the mean scaled cross-entropy at the natural points plus the mean
    friendly loss over each ball. The surrogate exceeds 1 on every misclassified
    point, so the bound dominates the 0/1 robust risk.

    Args:
        params: Network parameters
        dataset: Sample of at most 3-dimensional points
        epsilon: Ball radius
        rho: Confidence margin added to the friendly loss, > 0
        resolution: Lattice nodes per axis (odd)
        threads: Grid workers

    Returns:
        RiskReport with rhs_bound
    """
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    scans = _scan(params, dataset, epsilon, resolution, threads)
    n_nat, n_bdy, n_rob = _counts(scans)
    rhs = (float(np.mean([scan.natural_loss for scan in scans]))
           + float(np.mean([friendly_loss(scan.grid, rho) for scan in scans])))
    report = RiskReport(epsilon=epsilon, examples=len(scans), n_nat=n_nat, n_bdy=n_bdy, n_rob=n_rob,
                        rhs_bound=rhs, rho=rho)
    logger.info(f"eps={epsilon} rho={rho}: r_rob {report.r_rob:.4f} = {report.r_nat:.4f} + {report.r_bdy:.4f}, "
                f"bound {rhs:.4f}")
    return report


def check_report(report: RiskReport) -> None:
    """Raise BoundViolationError when the identity or the bound fails"""
    if not report.decomposition_holds:
        raise BoundViolationError(
            f"decomposition fails at eps={report.epsilon}: {report.n_rob} != {report.n_nat} + {report.n_bdy}")
    if not report.bound_holds:
        raise BoundViolationError(
            f"bound fails at eps={report.epsilon}, rho={report.rho}: r_rob {report.r_rob} > {report.rhs_bound}")
