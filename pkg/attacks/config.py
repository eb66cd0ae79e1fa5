"""
Attack configuration, named presets and the result record.
"""
import re
from dataclasses import dataclass
from typing import Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

Bound = Union[float, Tuple[float, ...]]
DomainBox = Tuple[Bound, Bound]

EVAL_PRESETS = ('fgsm', 'pgd10', 'pgd20', 'pgd100', 'cw30')

_PRESET_PATTERN = re.compile(r'^(?P<kind>pgd|cw)(?P<steps>\d+)(?:-(?P<tau>\d+))?$')


class AttackConfig(BaseModel):
    """All knobs of an adversarial search"""

    model_config = ConfigDict(extra='forbid', frozen=True)

    search: Literal['pgd', 'fgsm', 'unprojected'] = 'pgd'
    epsilon: float = Field(ge=0)
    steps: int = Field(default=10, ge=0)
    tau: Optional[int] = Field(default=None, ge=0)
    alpha: Optional[float] = Field(default=None, gt=0)
    init: Literal['none', 'uniform', 'gaussian'] = 'none'
    xi: float = Field(default=1e-3, ge=0)
    loss: Literal['ce', 'kl', 'cw'] = 'ce'
    kappa: float = Field(default=0.0, ge=0)
    domain_box: Optional[DomainBox] = None

    @model_validator(mode='after')
    def _check_consistency(self) -> "AttackConfig":
        if self.tau is not None and self.tau > self.steps:
            raise ValueError(f"tau ({self.tau}) must not exceed the step count K ({self.steps})")
        if self.domain_box is not None:
            lo, hi = (np.asarray(bound, dtype=np.float64) for bound in self.domain_box)
            if np.any(lo >= hi):
                raise ValueError(f"domain_box needs lo < hi, got {self.domain_box}")
        if self.search in ('fgsm', 'unprojected') and self.loss != 'ce':
            raise ValueError(f"{self.search} search ascends cross-entropy only, got loss {self.loss}")
        return self

    @property
    def step_size(self) -> float:
        """alpha, defaulting to epsilon / 10"""
        return self.alpha if self.alpha is not None else self.epsilon / 10.0

    @property
    def early_stop_budget(self) -> int:
        """tau, or K when early stopping is off"""
        return self.tau if self.tau is not None else self.steps

    def updated(self, **changes) -> "AttackConfig":
        """Validated copy with some fields replaced"""
        return AttackConfig.model_validate({**self.model_dump(), **changes})


@dataclass(frozen=True, eq=False)
class AttackOutcome:
    """Result of one adversarial search"""

    x_adv: np.ndarray
    backward_passes: int
    iterations_run: int
    misclassified_at_exit: bool


def preset(name: str, epsilon: float, alpha: Optional[float] = None,
           domain_box: Optional[DomainBox] = None) -> AttackConfig:
    """
    Build an AttackConfig from a preset name

    Names: `none` (identity), `fgsm`, `pgdK` (random start), `cwK` (margin loss,
    random start) and `pgdK-T` (early-stopped PGD-K-tau started at the natural point).

    Args:
        name: Preset name
        epsilon: Ball radius
        alpha: Step size, epsilon / 10 when omitted
        domain_box: Optional input box

    Returns:
        Validated attack configuration
    """
    common = {'epsilon': epsilon, 'alpha': alpha, 'domain_box': domain_box}
    if name == 'none':
        return AttackConfig(steps=0, **common)
    if name == 'fgsm':
        return AttackConfig(search='fgsm', steps=1, **common)

    match = _PRESET_PATTERN.match(name)
    if match is None:
        raise ValueError(f"unknown attack preset: {name!r}")
    steps = int(match['steps'])
    if match['tau'] is not None:
        if match['kind'] != 'pgd':
            raise ValueError(f"early stopping is only defined for pgd presets: {name!r}")
        return AttackConfig(steps=steps, tau=int(match['tau']), init='none', **common)
    loss = 'cw' if match['kind'] == 'cw' else 'ce'
    return AttackConfig(steps=steps, init='uniform', loss=loss, **common)
