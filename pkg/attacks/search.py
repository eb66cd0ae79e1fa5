"""
Adversarial example search: FGSM, PGD-K, early-stopped PGD-K-tau and variants.

Every search is a pure function of (params, x, y, cfg, seed). Randomness comes
from a generator seeded with `seed`, which may be a tuple such as
(run seed, epoch, batch, example) so that per-example work can run in any order.
"""
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from loguru import logger

from attacks.config import AttackConfig, AttackOutcome, DomainBox
from core_nn.errors import ShapeError
from core_nn.network import InputObjective, ModelParams, forward, grad_input, predict
from losses import objectives

Seed = Union[int, Sequence[int]]


def clip_to_box(point: np.ndarray, domain_box: Optional[DomainBox]) -> np.ndarray:
    if domain_box is None:
        return point
    lo, hi = domain_box
    return np.clip(point, np.asarray(lo, dtype=np.float64), np.asarray(hi, dtype=np.float64))


def project(x0, candidate, epsilon: float, domain_box: Optional[DomainBox] = None) -> np.ndarray:
    """
    Clamp candidate into the l-inf ball around x0, then into the domain box

    Args:
        x0: Ball center
        candidate: Point to project
        epsilon: Ball radius
        domain_box: Optional (lo, hi) bounds, scalars or per coordinate

    Returns:
        Projected point
    """
    x0 = np.asarray(x0, dtype=np.float64)
    candidate = np.asarray(candidate, dtype=np.float64)
    if x0.shape != candidate.shape:
        raise ShapeError(f"cannot project {candidate.shape} around center {x0.shape}")
    return clip_to_box(np.clip(candidate, x0 - epsilon, x0 + epsilon), domain_box)


def _rng(seed: Seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def example_seeds(base: Seed, count: int) -> List[Tuple[int, ...]]:
    """One seed per example: the base seed extended by the example index"""
    prefix = tuple(int(s) for s in np.atleast_1d(base))
    return [prefix + (i,) for i in range(count)]


def _start(x0: np.ndarray, cfg: AttackConfig, rng: np.random.Generator) -> np.ndarray:
    if cfg.init == 'uniform':
        noisy = x0 + rng.uniform(-cfg.epsilon, cfg.epsilon, size=x0.shape)
    elif cfg.init == 'gaussian':
        noisy = x0 + cfg.xi * rng.standard_normal(size=x0.shape)
    else:
        return x0.copy()
    return project(x0, noisy, cfg.epsilon, cfg.domain_box)


def _objective(params: ModelParams, x0: np.ndarray, y: int, cfg: AttackConfig) -> InputObjective:
    if cfg.loss == 'kl':
        # reference distribution from the natural point, held fixed during the search
        return InputObjective.kl(objectives.softmax(forward(params, x0).logits).data)
    if cfg.loss == 'cw':
        return InputObjective.cw(y, cfg.kappa)
    return InputObjective.ce(y)


def _ascend(params: ModelParams, x0: np.ndarray, point: np.ndarray, objective: InputObjective,
            cfg: AttackConfig, projected: bool = True) -> np.ndarray:
    direction = np.sign(grad_input(params, point, objective))
    moved = point + cfg.step_size * direction
    if projected:
        return project(x0, moved, cfg.epsilon, cfg.domain_box)
    return clip_to_box(moved, cfg.domain_box)


def _misclassified(params: ModelParams, point: np.ndarray, y: int) -> bool:
    return bool(predict(params, point) != y)


def _outcome(params: ModelParams, point: np.ndarray, y: int, passes: int, iterations: int) -> AttackOutcome:
    return AttackOutcome(x_adv=point, backward_passes=passes, iterations_run=iterations,
                         misclassified_at_exit=_misclassified(params, point, y))


def _natural(params: ModelParams, x) -> np.ndarray:
    x0 = np.asarray(x, dtype=np.float64)
    if x0.shape != (params.spec.input_dim,):
        raise ShapeError(f"attacks take one point of dim {params.spec.input_dim}, got shape {x0.shape}")
    return x0


def fgsm(params: ModelParams, x, y: int, epsilon: float,
         domain_box: Optional[DomainBox] = None) -> AttackOutcome:
    """One signed-gradient step of size epsilon on cross-entropy"""
    if epsilon < 0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon}")
    x0 = _natural(params, x)
    direction = np.sign(grad_input(params, x0, InputObjective.ce(y)))
    x_adv = project(x0, x0 + epsilon * direction, epsilon, domain_box)
    return _outcome(params, x_adv, y, passes=1, iterations=1)


def pgd(params: ModelParams, x, y: int, cfg: AttackConfig, seed: Seed = 0) -> AttackOutcome:
    """
    PGD-K: K projected signed-gradient ascent steps from the configured start

    Args:
        params: Network parameters
        x: Natural point
        y: Its label
        cfg: Attack configuration; loss may be ce, cw or kl
        seed: Seed for the random start

    Returns:
        Outcome with exactly K backward passes
    """
    x0 = _natural(params, x)
    point = _start(x0, cfg, _rng(seed))
    objective = _objective(params, x0, y, cfg)
    for _ in range(cfg.steps):
        point = _ascend(params, x0, point, objective, cfg)
    return _outcome(params, point, y, passes=cfg.steps, iterations=cfg.steps)


def _early_stopped(params: ModelParams, x, y: int, cfg: AttackConfig, seed: Seed,
                   projected: bool = True) -> AttackOutcome:
    x0 = _natural(params, x)
    point = _start(x0, cfg, _rng(seed))
    objective = _objective(params, x0, y, cfg)

    remaining, tau = cfg.steps, cfg.early_stop_budget
    passes = iterations = 0
    while remaining > 0:
        iterations += 1
        if _misclassified(params, point, y):
            if tau == 0:
                break
            tau -= 1
        point = _ascend(params, x0, point, objective, cfg, projected)
        passes += 1
        remaining -= 1

    logger.debug(f"early-stopped search ran {passes}/{cfg.steps} steps")
    return _outcome(params, point, y, passes=passes, iterations=iterations)


def pgd_tau(params: ModelParams, x, y: int, cfg: AttackConfig, seed: Seed = 0) -> AttackOutcome:
    """
    PGD-K-tau: once the iterate is misclassified, at most tau more steps

    The prediction check precedes each update, so a natural point that is already
    misclassified with tau = 0 comes back unperturbed after 0 backward passes.
    The tau counter only decrements on misclassified iterations.
    """
    if cfg.loss not in ('ce', 'cw'):
        raise ValueError(f"pgd_tau ascends ce or cw, got {cfg.loss}; use pgd_tau_kl for kl")
    return _early_stopped(params, x, y, cfg, seed)


def pgd_tau_kl(params: ModelParams, x, y: int, cfg: AttackConfig, seed: Seed = 0) -> AttackOutcome:
    """PGD-K-tau ascending KL(softmax(f(x)) || softmax(f(x_adv))); stopping still uses the label"""
    if cfg.loss != 'kl':
        raise ValueError(f"pgd_tau_kl needs loss kl, got {cfg.loss}")
    return _early_stopped(params, x, y, cfg, seed)


def cw_linf(params: ModelParams, x, y: int, cfg: AttackConfig, seed: Seed = 0) -> AttackOutcome:
    """PGD-K on the margin loss max(max_{i != y} z_i - z_y, -kappa)"""
    if cfg.loss != 'cw':
        raise ValueError(f"cw_linf needs loss cw, got {cfg.loss}")
    return pgd(params, x, y, cfg, seed)


def gd_unprojected(params: ModelParams, x, y: int, cfg: AttackConfig, seed: Seed = 0) -> AttackOutcome:
    """Early-stopped signed-gradient ascent without the epsilon-ball projection"""
    if cfg.loss != 'ce':
        raise ValueError(f"gd_unprojected ascends ce, got {cfg.loss}")
    return _early_stopped(params, x, y, cfg, seed, projected=False)


def run_attack(params: ModelParams, x, y: int, cfg: AttackConfig, seed: Seed = 0) -> AttackOutcome:
    """Dispatch to the search procedure cfg describes"""
    if cfg.search == 'fgsm':
        return fgsm(params, x, y, cfg.epsilon, cfg.domain_box)
    if cfg.search == 'unprojected':
        return gd_unprojected(params, x, y, cfg, seed)
    if cfg.loss == 'kl':
        return pgd_tau_kl(params, x, y, cfg, seed)
    if cfg.tau is not None:
        return pgd_tau(params, x, y, cfg, seed)
    if cfg.loss == 'cw':
        return cw_linf(params, x, y, cfg, seed)
    return pgd(params, x, y, cfg, seed)


def attack_batch(params: ModelParams, xs, ys, cfg: AttackConfig,
                 seeds: Sequence[Seed], threads: int = 1) -> List[AttackOutcome]:
    """
    Run one attack per example, optionally on a thread pool

    Args:
        params: Shared read-only parameters
        xs: Natural points, one per row
        ys: Labels
        cfg: Attack configuration
        seeds: One seed per example
        threads: Worker count; results do not depend on it

    Returns:
        Outcomes in input order
    """
    xs = np.asarray(xs, dtype=np.float64)
    if not (len(xs) == len(ys) == len(seeds)):
        raise ShapeError(f"got {len(xs)} points, {len(ys)} labels and {len(seeds)} seeds")
    if threads <= 1:
        return [run_attack(params, x, int(y), cfg, s) for x, y, s in zip(xs, ys, seeds)]
    return Parallel(n_jobs=threads, prefer='threads')(
        delayed(run_attack)(params, x, int(y), cfg, s) for x, y, s in zip(xs, ys, seeds))


def stack_outcomes(outcomes: Sequence[AttackOutcome]) -> Tuple[np.ndarray, np.ndarray]:
    """Adversarial rows and backward-pass counts of a batch of outcomes"""
    return (np.stack([o.x_adv for o in outcomes]),
            np.asarray([o.backward_passes for o in outcomes], dtype=np.int64))
