#!/usr/bin/env python3
"""
Command-line entry point for the adversarial training lab.
"""
import argparse
import sys
from pathlib import Path

from loguru import logger

from attacks.config import EVAL_PRESETS
from cli import (
    EXIT_INVALID,
    cmd_bound_check,
    cmd_eval,
    cmd_mixture,
    cmd_sweep_epsilon,
    cmd_sweep_tau,
    cmd_train,
)
from config import Config

CONSOLE_FORMAT = ("<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | "
                  "<cyan>{name}</cyan>:<cyan>{function}</cyan> - <level>{message}</level>")


def configure_logging(level: str) -> None:
    """Console sink, plus a rotating file sink when LAB_LOG_DIR is set"""
    logger.remove()
    logger.add(sys.stderr, colorize=True, format=CONSOLE_FORMAT, level=level)
    if Config.LOG_DIR:
        logger.add(str(Path(Config.LOG_DIR) / "lab_{time}.log"), rotation="1 day", retention="7 days", level=level)


def _add_run_flags(parser: argparse.ArgumentParser, config_required: bool = True) -> None:
    parser.add_argument('--config', dest='config_path', required=config_required, help='experiment JSON document')
    parser.add_argument('--out', help='output directory')
    parser.add_argument('--seed', type=int, help='overrides the configured seed')
    parser.add_argument('--threads', type=int, help='worker count')


def _add_checkpoint_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--checkpoint', required=True, help='checkpoint manifest (.json) or stem')
    parser.add_argument('--data', dest='data_path', help='CSV dataset; defaults to the config test split')
    parser.add_argument('--epsilon', type=float, help='attack radius; defaults to the config')
    parser.add_argument('--domain-box', type=float, nargs=2, metavar=('LO', 'HI'),
                        help='input box for --data files')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Friendly adversarial training lab')
    parser.add_argument('--log-level', default=Config.LOG_LEVEL, help='loguru level name')
    sub = parser.add_subparsers(dest='command', required=True)

    train = sub.add_parser('train', help='train one experiment')
    _add_run_flags(train)

    evaluate = sub.add_parser('eval', help='accuracy of a checkpoint under attack presets')
    _add_run_flags(evaluate, config_required=False)
    _add_checkpoint_flags(evaluate)
    evaluate.add_argument('--attack', dest='presets', nargs='+', default=list(EVAL_PRESETS),
                          help='presets such as fgsm, pgd20, pgd100, cw30, pgd10-2')

    sweep_tau = sub.add_parser('sweep-tau', help='train across early-stop budgets')
    _add_run_flags(sweep_tau)
    sweep_tau.add_argument('--taus', type=int, nargs='*', default=[], help='tau values')
    sweep_tau.add_argument('--seeds', type=int, default=Config.SWEEP_SEEDS, help='seeds per tau')

    sweep_eps = sub.add_parser('sweep-epsilon', help='standard AT against FAT across training radii')
    _add_run_flags(sweep_eps)
    sweep_eps.add_argument('--epsilons', type=float, nargs='*', default=[], help='training radii')
    sweep_eps.add_argument('--taus', type=int, nargs='+', default=[0, 1, 3], help='FAT tau values')
    sweep_eps.add_argument('--seeds', type=int, default=Config.SWEEP_SEEDS, help='seeds per cell')

    mixture = sub.add_parser('mixture', help='hidden-layer PCA of natural and attacked data')
    _add_run_flags(mixture, config_required=False)
    _add_checkpoint_flags(mixture)
    mixture.add_argument('--attack-a', default='pgd20')
    mixture.add_argument('--attack-b', default='pgd20-0')
    mixture.add_argument('--layer', type=int, default=-1, help='hidden layer index, -1 for the last')

    bound = sub.add_parser('bound-check', help='verify the risk decomposition and upper bound')
    _add_run_flags(bound, config_required=False)
    bound.add_argument('--checkpoint', required=True)
    bound.add_argument('--data', dest='data_path')
    bound.add_argument('--domain-box', type=float, nargs=2, metavar=('LO', 'HI'))
    bound.add_argument('--epsilon', dest='epsilons', type=float, nargs='+', required=True)
    bound.add_argument('--rho', dest='rhos', type=float, nargs='+', default=[0.01, 0.1, 1.0])
    bound.add_argument('--resolution', type=int, default=21)
    return parser


def main(argv=None) -> int:
    """Main entry point"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INVALID if e.code else 0
    configure_logging(args.log_level.upper())

    threads = args.threads or Config.THREADS
    seed = args.seed if args.seed is not None else 0
    if args.command == 'train':
        return cmd_train(args.config_path, out=args.out, seed=args.seed, threads=args.threads)
    if args.command == 'eval':
        return cmd_eval(args.checkpoint, config_path=args.config_path, data_path=args.data_path,
                        presets=args.presets, epsilon=args.epsilon, out=args.out, seed=seed, threads=threads,
                        domain_box=args.domain_box)
    if args.command == 'sweep-tau':
        return cmd_sweep_tau(args.config_path, args.taus, out=args.out, seeds=args.seeds, seed=args.seed,
                             threads=threads)
    if args.command == 'sweep-epsilon':
        return cmd_sweep_epsilon(args.config_path, args.epsilons, taus=args.taus, out=args.out, seeds=args.seeds,
                                 seed=args.seed, threads=threads)
    if args.command == 'mixture':
        return cmd_mixture(args.checkpoint, config_path=args.config_path, data_path=args.data_path,
                           attack_a=args.attack_a, attack_b=args.attack_b, layer=args.layer, epsilon=args.epsilon,
                           out=args.out, seed=seed, threads=threads,
                           domain_box=args.domain_box)
    if args.command == 'bound-check':
        return cmd_bound_check(args.checkpoint, args.epsilons, args.rhos, config_path=args.config_path,
                               data_path=args.data_path, resolution=args.resolution, out=args.out, threads=threads,
                               domain_box=args.domain_box)
    parser.error(f"unknown command {args.command}")
    return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
