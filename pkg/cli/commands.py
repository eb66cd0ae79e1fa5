"""
Subcommand implementations. Each returns a process exit code:
0 success, 1 failed check or runtime failure, 2 invalid configuration.
"""
import functools
import json
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from loguru import logger
from pydantic import ValidationError

from attacks.config import EVAL_PRESETS, preset
from cli.experiment import ExperimentConfig, load_experiment
from config import Config
from core_nn.checkpoint import load_checkpoint, save_checkpoint
from core_nn.errors import BoundViolationError, ConfigError, ShapeError
from core_nn.network import ModelParams
from data.csv_io import load_csv
from data.dataset import Dataset
from metrics.evaluation import evaluate_presets
from metrics.mixture import MIXTURE_SOURCES, mixture_experiment
from metrics.risk import check_report, theorem1_check
from training.config import Method
from training.trainer import METRIC_COLUMNS, EpochStats, train

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2

EVALUATION_COLUMNS = ('attack', 'epsilon', 'standard_acc', 'robust_acc')
MIXTURE_COLUMNS = ('x', 'y', 'label', 'source')
BOUND_COLUMNS = ('epsilon', 'rho', 'r_nat', 'r_bdy', 'r_rob', 'rhs_bound', 'decomposition_holds', 'bound_holds')
SWEEP_TAU_COLUMNS = ('tau', 'runs', 'standard_acc', 'robust_acc', 'mean_backward_passes')
SWEEP_EPSILON_COLUMNS = ('epsilon', 'method', 'tau', 'runs', 'standard_acc', 'robust_acc', 'mean_backward_passes')
DEFAULT_SWEEP_TAUS = (0, 1, 3)


def command(fn):
    """Turn library exceptions into a logged diagnostic and an exit code"""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs) -> int:
        try:
            return fn(*args, **kwargs)
        except (ValidationError, ConfigError) as e:
            logger.error(f"Invalid configuration: {e}")
            return EXIT_INVALID
        except BoundViolationError as e:
            logger.error(f"Check failed: {e}")
            return EXIT_FAILED
        except Exception as e:
            logger.error(f"{fn.__name__} failed: {e}")
            return EXIT_FAILED

    return wrapper


@contextmanager
def run_log(out_dir: Path):
    """Mirror log output into <out_dir>/run.log for the duration of a command"""
    out_dir.mkdir(parents=True, exist_ok=True)
    sink = logger.add(out_dir / 'run.log', format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function} - {message}",
                      mode='w')
    try:
        yield out_dir
    finally:
        logger.remove(sink)


def write_csv(rows: Sequence[Dict], columns: Sequence[str], path: Path) -> Path:
    pd.DataFrame(list(rows), columns=list(columns)).to_csv(path, index=False, float_format='%.17g',
                                                            lineterminator='\n')
    return path


def write_json(document, path: Path) -> Path:
    path.write_text(json.dumps(document, sort_keys=True, indent=2) + '\n', encoding='utf-8')
    return path


def _output_dir(out: Optional[str], cfg: Optional[ExperimentConfig] = None) -> Path:
    if out is not None:
        return Path(out)
    if cfg is not None and cfg.output_dir is not None:
        return Path(cfg.output_dir)
    return Path(Config.OUTPUT_DIR)


def run_experiment(cfg: ExperimentConfig, out_dir: Path) -> Tuple[ModelParams, List[EpochStats]]:
    """
    Train, checkpoint and evaluate one experiment

    Writes the checkpoint, metrics.csv, evaluation.csv and run.json under out_dir.

    Args:
        cfg: Resolved experiment configuration
        out_dir: Directory owned by this run

    Returns:
        Final parameters and the epoch history
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    train_set, test_set = cfg.dataset.build_split()
    params, history = train(train_set, cfg.training, cfg.model, eval_dataset=test_set)

    save_checkpoint(params, out_dir / Config.CHECKPOINT_NAME)
    write_csv([stats.as_row() for stats in history], METRIC_COLUMNS, out_dir / 'metrics.csv')
    evaluation = evaluate_presets(params, test_set, cfg.evaluation.presets, cfg.eval_epsilon,
                                  seed=cfg.training.seed, threads=cfg.training.threads, alpha=cfg.evaluation.alpha)
    write_csv(evaluation, EVALUATION_COLUMNS, out_dir / 'evaluation.csv')
    write_json({
        'config': cfg.model_dump(mode='json'),
        'seeds': {'dataset': cfg.dataset.seed, 'training': cfg.training.seed, 'evaluation': cfg.training.seed},
        'data': {'train_examples': len(train_set), 'test_examples': len(test_set),
                 'dim': train_set.dim, 'class_count': train_set.class_count},
        'checkpoint': f"{Config.CHECKPOINT_NAME}.json",
    }, out_dir / 'run.json')
    logger.info(f"Run written to {out_dir}")
    return params, history


@command
def cmd_train(config_path: str, out: Optional[str] = None, seed: Optional[int] = None,
              threads: Optional[int] = None) -> int:
    """Train one experiment end to end"""
    cfg = load_experiment(config_path).with_overrides(seed=seed, threads=threads, output_dir=out)
    out_dir = _output_dir(None, cfg)
    with run_log(out_dir):
        _, history = run_experiment(cfg, out_dir)
        final = history[-1]
        logger.info(f"Final epoch: standard {final.standard_acc:.4f}, robust {final.robust_acc:.4f}, "
                    f"BPs {final.mean_backward_passes:.2f}")
    return EXIT_OK


def _evaluation_data(params: ModelParams, config_path: Optional[str], data_path: Optional[str],
                     domain_box: Optional[Sequence[float]] = None) -> Dataset:
    if domain_box is not None:
        if data_path is None:
            raise ConfigError("--domain-box only applies to --data files")
        lo, hi = domain_box
        if not lo < hi:
            raise ConfigError(f"domain box needs lo < hi, got {list(domain_box)}")
        domain_box = (float(lo), float(hi))
    if data_path is not None:
        dataset = load_csv(data_path, class_count=params.spec.class_count, domain_box=domain_box)
    elif config_path is not None:
        dataset = load_experiment(config_path).dataset.build_split()[1]
    else:
        raise ConfigError("pass --data or --config to choose the evaluation examples")
    if dataset.dim != params.spec.input_dim or dataset.class_count != params.spec.class_count:
        raise ShapeError(f"checkpoint expects dim {params.spec.input_dim} and {params.spec.class_count} classes, "
                         f"data has dim {dataset.dim} and {dataset.class_count} classes")
    return dataset


def _resolve_epsilon(epsilon: Optional[float], config_path: Optional[str]) -> float:
    if epsilon is not None:
        if epsilon < 0:
            raise ConfigError(f"epsilon must be non-negative, got {epsilon}")
        return epsilon
    if config_path is not None:
        return load_experiment(config_path).eval_epsilon
    raise ConfigError("pass --epsilon or a --config with a training radius")


def _check_presets(names: Sequence[str], epsilon: float) -> None:
    for name in names:
        try:
            preset(name, epsilon)
        except ValueError as e:
            raise ConfigError(str(e)) from e


@command
def cmd_eval(checkpoint: str, config_path: Optional[str] = None, data_path: Optional[str] = None,
             presets: Optional[Sequence[str]] = None, epsilon: Optional[float] = None, out: Optional[str] = None,
             seed: int = 0, threads: int = 1, domain_box: Optional[Sequence[float]] = None) -> int:
    """Standard and robust accuracy of a checkpoint under attack presets"""
    presets = list(presets or EVAL_PRESETS)
    eps = _resolve_epsilon(epsilon, config_path)
    _check_presets(presets, eps)
    params = load_checkpoint(checkpoint)
    dataset = _evaluation_data(params, config_path, data_path, domain_box)

    rows = evaluate_presets(params, dataset, presets, eps, seed=seed, threads=threads)
    logger.info("=" * 60)
    logger.info(f"EVALUATION ({len(dataset)} examples, eps={eps})")
    for row in rows:
        logger.info(f"  {row['attack']:>10}: standard {row['standard_acc']:.4f} | robust {row['robust_acc']:.4f}")
    logger.info("=" * 60)
    if out is not None:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_csv(rows, EVALUATION_COLUMNS, out_dir / 'evaluation.csv')
    return EXIT_OK


def _sweep_run(document: Dict, out_dir: str) -> Dict:
    cfg = ExperimentConfig.model_validate(document)
    _, history = run_experiment(cfg, Path(out_dir))
    return history[-1].as_row()


def _run_jobs(jobs: List[Tuple[Dict, str]], threads: int) -> List[Dict]:
    if threads <= 1:
        return [_sweep_run(document, out_dir) for document, out_dir in jobs]
    return Parallel(n_jobs=threads)(delayed(_sweep_run)(document, out_dir) for document, out_dir in jobs)


def _median(rows: List[Dict], column: str) -> float:
    return float(np.median([row[column] for row in rows]))


def _sweep_document(base: ExperimentConfig, method: Dict, tau: int, seed: int, epsilon: Optional[float] = None) -> Dict:
    document = base.model_dump()
    training = document['training']
    training.update(method=method, tau_schedule=[(0, tau)], seed=seed, threads=1)
    if epsilon is not None:
        training['eval_attack'] = base.training.evaluation_attack.model_dump()
        training['attack']['epsilon'] = epsilon
        training['epsilon_schedule'] = None
        document['evaluation']['epsilon'] = base.eval_epsilon
    return document


@command
def cmd_sweep_tau(config_path: str, taus: Sequence[int], out: Optional[str] = None, seeds: Optional[int] = None,
                  seed: Optional[int] = None, threads: Optional[int] = None) -> int:
    """
    Train the friendly variant of the configured method once per (tau, seed)

    Writes sweep_tau_runs.csv with every run's final epoch and sweep_tau.csv with
    the median over seeds per tau.
    """
    if not taus:
        raise ConfigError("the tau list is empty")
    base = load_experiment(config_path).with_overrides(seed=seed)
    steps = base.training.attack.steps
    bad = [tau for tau in taus if not 0 <= tau <= steps]
    if bad:
        raise ConfigError(f"tau values {bad} are outside [0, K={steps}]")
    seeds = seeds or Config.SWEEP_SEEDS
    threads = threads or Config.THREADS
    out_dir = _output_dir(out, base)
    method = base.training.method.as_friendly().model_dump()

    with run_log(out_dir):
        jobs, keys = [], []
        for tau in taus:
            for offset in range(seeds):
                run_seed = base.training.seed + offset
                jobs.append((_sweep_document(base, method, tau, run_seed),
                             str(out_dir / f"tau_{tau}" / f"seed_{run_seed}")))
                keys.append((tau, run_seed))
        logger.info(f"Sweeping tau over {list(taus)} with {seeds} seeds ({len(jobs)} runs)")
        finals = _run_jobs(jobs, threads)

        runs = [{'tau': tau, 'seed': run_seed, **final} for (tau, run_seed), final in zip(keys, finals)]
        write_csv(runs, ('tau', 'seed') + METRIC_COLUMNS[4:], out_dir / 'sweep_tau_runs.csv')
        summary = []
        for tau in taus:
            cell = [row for row in runs if row['tau'] == tau]
            summary.append({'tau': tau, 'runs': len(cell), 'standard_acc': _median(cell, 'standard_acc'),
                            'robust_acc': _median(cell, 'robust_acc'),
                            'mean_backward_passes': _median(cell, 'mean_backward_passes')})
            logger.info(f"tau={tau}: standard {summary[-1]['standard_acc']:.4f}, robust {summary[-1]['robust_acc']:.4f}")
        write_csv(summary, SWEEP_TAU_COLUMNS, out_dir / 'sweep_tau.csv')
    return EXIT_OK


@command
def cmd_sweep_epsilon(config_path: str, epsilons: Sequence[float], taus: Sequence[int] = DEFAULT_SWEEP_TAUS,
                      out: Optional[str] = None, seeds: Optional[int] = None, seed: Optional[int] = None,
                      threads: Optional[int] = None) -> int:
    """
    Standard AT against FAT at several training radii, evaluated at one fixed radius

    Writes sweep_epsilon.csv with the median over seeds per (epsilon, method, tau).
    """
    if not epsilons:
        raise ConfigError("the epsilon list is empty")
    if any(eps < 0 for eps in epsilons):
        raise ConfigError(f"training radii must be non-negative, got {list(epsilons)}")
    base = load_experiment(config_path).with_overrides(seed=seed)
    steps = base.training.attack.steps
    bad = [tau for tau in taus if not 0 <= tau <= steps]
    if bad:
        raise ConfigError(f"tau values {bad} are outside [0, K={steps}]")
    seeds = seeds or Config.SWEEP_SEEDS
    threads = threads or Config.THREADS
    out_dir = _output_dir(out, base)

    baseline = base.training.method
    friendly = baseline.as_friendly()
    if baseline.friendly:
        name = {'fat': 'standard_at', 'fat_trades': 'trades', 'fat_mart': 'mart'}[baseline.name]
        baseline = Method(name=name, beta=baseline.beta)
    arms = [(baseline.name, steps, baseline.model_dump())]
    arms += [(friendly.name, tau, friendly.model_dump()) for tau in taus]

    with run_log(out_dir):
        jobs, keys = [], []
        for eps in epsilons:
            for name, tau, method in arms:
                for offset in range(seeds):
                    run_seed = base.training.seed + offset
                    jobs.append((_sweep_document(base, method, tau, run_seed, epsilon=eps),
                                 str(out_dir / f"eps_{eps:g}" / f"{name}_tau_{tau}" / f"seed_{run_seed}")))
                    keys.append((eps, name, tau))
        logger.info(f"Sweeping training radius over {list(epsilons)} for {len(arms)} arms ({len(jobs)} runs)")
        finals = _run_jobs(jobs, threads)

        summary = []
        for eps in epsilons:
            for name, tau, _ in arms:
                cell = [final for key, final in zip(keys, finals) if key == (eps, name, tau)]
                summary.append({'epsilon': eps, 'method': name, 'tau': tau, 'runs': len(cell),
                                'standard_acc': _median(cell, 'standard_acc'),
                                'robust_acc': _median(cell, 'robust_acc'),
                                'mean_backward_passes': _median(cell, 'mean_backward_passes')})
        write_csv(summary, SWEEP_EPSILON_COLUMNS, out_dir / 'sweep_epsilon.csv')
    return EXIT_OK


@command
def cmd_mixture(checkpoint: str, config_path: Optional[str] = None, data_path: Optional[str] = None,
                attack_a: str = 'pgd20', attack_b: str = 'pgd20-0', layer: int = -1,
                epsilon: Optional[float] = None, out: Optional[str] = None, seed: int = 0, threads: int = 1,
                domain_box: Optional[Sequence[float]] = None) -> int:
    """Project natural and both attacked sets through a hidden layer; write point clouds and scores"""
    eps = _resolve_epsilon(epsilon, config_path)
    params = load_checkpoint(checkpoint)
    dataset = _evaluation_data(params, config_path, data_path, domain_box)
    _check_presets([attack_a, attack_b], eps)
    cfg_a = preset(attack_a, eps, domain_box=dataset.domain_box)
    cfg_b = preset(attack_b, eps, domain_box=dataset.domain_box)
    out_dir = _output_dir(out)

    with run_log(out_dir):
        result = mixture_experiment(params, dataset, cfg_a, cfg_b, layer=layer, seed=seed, threads=threads)
        rows = []
        for source in MIXTURE_SOURCES:
            report = result.reports[source]
            for (px, py), label in zip(report.projected, report.labels):
                rows.append({'x': px, 'y': py, 'label': int(label), 'source': source})
        write_csv(rows, MIXTURE_COLUMNS, out_dir / 'mixture.csv')
        write_json({'layer': result.layer, 'epsilon': eps, 'attack_a': attack_a, 'attack_b': attack_b,
                    'fisher': {source: result.reports[source].fisher_score for source in MIXTURE_SOURCES}},
                   out_dir / 'fisher.json')
    return EXIT_OK


@command
def cmd_bound_check(checkpoint: str, epsilons: Sequence[float], rhos: Sequence[float],
                    config_path: Optional[str] = None, data_path: Optional[str] = None, resolution: int = 21,
                    out: Optional[str] = None, threads: int = 1,
                    domain_box: Optional[Sequence[float]] = None) -> int:
    """
    Verify the risk decomposition and the surrogate upper bound with the grid attacker

    Returns EXIT_FAILED when any (epsilon, rho) case violates either check.
    """
    if not epsilons or not rhos:
        raise ConfigError("pass at least one epsilon and one rho")
    if any(rho <= 0 for rho in rhos):
        raise ConfigError(f"rho must be positive, got {list(rhos)}")
    if any(eps < 0 for eps in epsilons):
        raise ConfigError(f"epsilon must be non-negative, got {list(epsilons)}")
    if resolution < 1 or resolution % 2 == 0:
        raise ConfigError(f"resolution must be a positive odd number, got {resolution}")
    params = load_checkpoint(checkpoint)
    dataset = _evaluation_data(params, config_path, data_path, domain_box)

    reports = [theorem1_check(params, dataset, eps, rho, resolution, threads=threads)
               for eps in epsilons for rho in rhos]
    logger.info("=" * 60)
    logger.info(f"BOUND CHECK ({len(dataset)} examples, grid {resolution}^{dataset.dim})")
    for report in reports:
        status = 'ok' if report.decomposition_holds and report.bound_holds else 'FAIL'
        logger.info(f"  eps={report.epsilon:g} rho={report.rho:g}: r_nat {report.r_nat:.4f} + r_bdy "
                    f"{report.r_bdy:.4f} = r_rob {report.r_rob:.4f} <= {report.rhs_bound:.4f} [{status}]")
    logger.info("=" * 60)
    if out is not None:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_csv([report.as_row() for report in reports], BOUND_COLUMNS, out_dir / 'bound_check.csv')

    for report in reports:
        check_report(report)
    return EXIT_OK
