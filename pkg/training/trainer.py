"""
Adversarial training loop for standard AT, FAT and the TRADES / MART families.
"""
from dataclasses import asdict, dataclass
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger

from attacks.search import attack_batch, example_seeds, stack_outcomes
from core_nn.errors import DatasetError, NonFiniteError, ShapeError, TrainingDivergedError
from core_nn.network import (
    MlpSpec,
    ModelParams,
    ParamObjective,
    forward,
    grad_params,
    init_params,
    objective_loss,
)
from data.dataset import Dataset, batches
from metrics.evaluation import accuracy, robust_accuracy
from training.config import Method, TrainConfig
from training.optim import sgd_momentum_step, zero_velocity

METRIC_COLUMNS = ('epoch', 'lr', 'tau', 'epsilon', 'mean_train_loss', 'standard_acc', 'robust_acc',
                  'mean_backward_passes')


@dataclass(frozen=True)
class EpochStats:
    """Measurements of one training epoch"""

    epoch: int
    lr: float
    tau: int
    epsilon: float
    mean_train_loss: float
    standard_acc: float
    robust_acc: float
    mean_backward_passes: float

    def as_row(self) -> dict:
        row = asdict(self)
        return {column: row[column] for column in METRIC_COLUMNS}


def param_objective(method: Method, natural) -> ParamObjective:
    """Training loss of a method; natural rows feed the trades and mart regularizers"""
    if method.family == 'trades':
        return ParamObjective.trades(method.beta, natural)
    if method.family == 'mart':
        return ParamObjective.mart(method.beta, natural)
    return ParamObjective.ce()


def batch_objective(method: Method, params: ModelParams, natural, adversarial, labels) -> float:
    """
    Mean composite loss of a batch

    Args:
        method: Training method
        params: Network parameters
        natural: Natural rows
        adversarial: Adversarial rows aligned one-to-one with natural
        labels: Labels of the rows

    Returns:
        Mean loss over the batch
    """
    natural = np.asarray(natural, dtype=np.float64)
    adversarial = np.asarray(adversarial, dtype=np.float64)
    if natural.shape != adversarial.shape:
        raise ShapeError(f"natural batch {natural.shape} and adversarial batch {adversarial.shape} differ")
    logits_adv = forward(params, adversarial).logits
    logits_nat = forward(params, natural).logits if method.family != 'at' else None
    objective = param_objective(method, natural)
    labels = np.asarray(labels, dtype=np.int64)
    return float(np.mean(objective_loss(objective, logits_adv, logits_nat, labels).data))


def _check_data(dataset: Dataset, spec: MlpSpec) -> None:
    if len(dataset) == 0:
        raise DatasetError("cannot train on an empty dataset")
    if dataset.dim != spec.input_dim or dataset.class_count != spec.class_count:
        raise ShapeError(f"dataset of dim {dataset.dim} with {dataset.class_count} classes does not fit "
                         f"layer widths {list(spec.layer_widths)}")


def train(dataset: Dataset, cfg: TrainConfig, spec: MlpSpec,
          eval_dataset: Optional[Dataset] = None) -> Tuple[ModelParams, List[EpochStats]]:
    """
    Train a fresh network with the configured method

    Each mini-batch is attacked example by example against the parameters held at
    the start of the batch, then one SGD-momentum step is taken on the method's
    objective. Accuracies are measured on eval_dataset when given.

    Args:
        dataset: Training examples
        cfg: Training configuration
        spec: Network architecture
        eval_dataset: Optional held-out examples for the per-epoch accuracies

    Returns:
        Final parameters and one EpochStats per epoch

    Raises:
        TrainingDivergedError: The loss or the parameters became non-finite
    """
    _check_data(dataset, spec)
    evaluation = eval_dataset if eval_dataset is not None else dataset
    params = init_params(spec, cfg.seed)
    velocity = zero_velocity(params)
    history = []

    logger.info(f"Training {cfg.method.name} for {cfg.epochs} epochs on {len(dataset)} examples "
                f"(K={cfg.attack.steps}, seed={cfg.seed})")
    for epoch in range(cfg.epochs):
        lr = cfg.lr_at(epoch)
        attack = cfg.epoch_attack(epoch)
        loss_sum, passes = 0.0, []

        for batch_index, indices in enumerate(batches(dataset, cfg.batch_size, epoch, cfg.seed)):
            xs, ys = dataset.features[indices], dataset.labels[indices]
            try:
                outcomes = attack_batch(params, xs, ys, attack,
                                        example_seeds((cfg.seed, epoch, batch_index), len(ys)), threads=cfg.threads)
                x_adv, bp = stack_outcomes(outcomes)
                grads = grad_params(params, list(zip(x_adv, ys)), param_objective(cfg.method, xs))
                params, velocity = sgd_momentum_step(params, grads.arrays, velocity, lr, cfg.momentum,
                                                     cfg.weight_decay)
            except NonFiniteError as e:
                logger.error(f"Training diverged at epoch {epoch}, batch {batch_index}: {e}")
                raise TrainingDivergedError(f"epoch {epoch}, batch {batch_index}: {e}") from e
            loss_sum += grads.loss * len(ys)
            passes.extend(bp.tolist())
            logger.debug(f"epoch {epoch} batch {batch_index}: loss {grads.loss:.6f}, mean BPs {bp.mean():.2f}")

        mean_train_loss = loss_sum / len(dataset)
        if not np.isfinite(mean_train_loss):
            logger.error(f"Non-finite mean training loss at epoch {epoch}")
            raise TrainingDivergedError(f"epoch {epoch}: mean training loss is {mean_train_loss}")
        try:
            standard_acc = accuracy(params, evaluation)
            robust_acc = robust_accuracy(params, evaluation, cfg.evaluation_attack, seed=(cfg.seed, epoch),
                                         threads=cfg.threads)
        except NonFiniteError as e:
            logger.error(f"Training diverged at epoch {epoch}, evaluation: {e}")
            raise TrainingDivergedError(f"epoch {epoch}, evaluation: {e}") from e

        stats = EpochStats(
            epoch=epoch,
            lr=lr,
            tau=attack.early_stop_budget,
            epsilon=attack.epsilon,
            mean_train_loss=mean_train_loss,
            standard_acc=standard_acc,
            robust_acc=robust_acc,
            mean_backward_passes=float(np.mean(passes)),
        )
        history.append(stats)
        logger.info(f"Epoch {epoch + 1}/{cfg.epochs} | lr {lr:g} | tau {stats.tau} | loss {stats.mean_train_loss:.4f} "
                    f"| std {stats.standard_acc:.4f} | rob {stats.robust_acc:.4f} "
                    f"| BPs {stats.mean_backward_passes:.2f}")

    params = params.replace(params.arrays(), train_seed=cfg.seed, method=cfg.method.name, epochs=cfg.epochs)
    return params, history
