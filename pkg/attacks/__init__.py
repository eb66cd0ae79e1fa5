"""
Attacks package initialization.
"""
from attacks.config import EVAL_PRESETS, AttackConfig, AttackOutcome, preset
from attacks.grid import GridResult, grid_attack, lattice
from attacks.search import (
    attack_batch,
    cw_linf,
    example_seeds,
    fgsm,
    gd_unprojected,
    pgd,
    pgd_tau,
    pgd_tau_kl,
    project,
    run_attack,
    stack_outcomes,
)

__all__ = [
    'EVAL_PRESETS', 'AttackConfig', 'AttackOutcome', 'GridResult',
    'attack_batch', 'cw_linf', 'example_seeds', 'fgsm', 'gd_unprojected', 'grid_attack', 'lattice', 'pgd', 'pgd_tau',
    'pgd_tau_kl', 'preset', 'project', 'run_attack', 'stack_outcomes',
]
