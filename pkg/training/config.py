"""
Training method selection, piecewise-constant schedules and the run configuration.
"""
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, RootModel, model_validator

from attacks.config import AttackConfig, preset

MethodName = Literal['standard_at', 'fat', 'trades', 'fat_trades', 'mart', 'fat_mart']

DEFAULT_BETA = 6.0
TRADES_FAMILY = ('trades', 'fat_trades')
MART_FAMILY = ('mart', 'fat_mart')
FRIENDLY_METHODS = ('fat', 'fat_trades', 'fat_mart')


class Method(BaseModel):
    """One of the six training regimes; beta only for the trades and mart families"""

    model_config = ConfigDict(extra='forbid', frozen=True)

    name: MethodName = 'fat'
    beta: Optional[float] = Field(default=None, ge=0)

    @model_validator(mode='before')
    @classmethod
    def _default_beta(cls, data):
        if isinstance(data, str):
            data = {'name': data}
        if isinstance(data, dict):
            name = data.get('name', 'fat')
            if name in TRADES_FAMILY + MART_FAMILY and data.get('beta') is None:
                data = {**data, 'beta': DEFAULT_BETA}
        return data

    @model_validator(mode='after')
    def _check_beta(self) -> "Method":
        if self.name in ('standard_at', 'fat') and self.beta is not None:
            raise ValueError(f"method {self.name} takes no beta")
        return self

    @property
    def family(self) -> Literal['at', 'trades', 'mart']:
        if self.name in TRADES_FAMILY:
            return 'trades'
        if self.name in MART_FAMILY:
            return 'mart'
        return 'at'

    @property
    def friendly(self) -> bool:
        """Whether the training attack stops early (FAT variants)"""
        return self.name in FRIENDLY_METHODS

    def as_friendly(self) -> "Method":
        """The FAT counterpart of this method, same beta"""
        if self.friendly:
            return self
        name = {'standard_at': 'fat', 'trades': 'fat_trades', 'mart': 'fat_mart'}[self.name]
        return Method(name=name, beta=self.beta)


class Schedule(RootModel[List[Tuple[int, float]]]):
    """Piecewise-constant value over epochs, as (start_epoch, value) pairs"""

    model_config = ConfigDict(frozen=True)

    @model_validator(mode='after')
    def _check_pairs(self) -> "Schedule":
        starts = [start for start, _ in self.root]
        if not starts or starts[0] != 0:
            raise ValueError("a schedule needs a first pair starting at epoch 0")
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError(f"schedule start epochs must strictly increase, got {starts}")
        return self

    @classmethod
    def constant(cls, value: float) -> "Schedule":
        return cls([(0, value)])

    def lookup(self, epoch: int) -> float:
        """Value of the last pair whose start_epoch <= epoch"""
        if epoch < 0:
            raise ValueError(f"epoch must be non-negative, got {epoch}")
        value = self.root[0][1]
        for start, candidate in self.root:
            if start > epoch:
                break
            value = candidate
        return value

    def values(self) -> List[float]:
        return [value for _, value in self.root]


def schedule_lookup(schedule: Schedule, epoch: int) -> float:
    return schedule.lookup(epoch)


class TrainConfig(BaseModel):
    """
    Everything the trainer needs besides the data and the architecture

    The attack's tau is replaced every epoch by tau_schedule (friendly methods) or by
    K (baselines); its epsilon likewise by epsilon_schedule when one is given.
    """

    model_config = ConfigDict(extra='forbid', frozen=True)

    method: Method = Field(default_factory=Method)
    epochs: int = Field(default=30, ge=1)
    batch_size: int = Field(default=32, ge=1)
    lr_schedule: Schedule = Field(default_factory=lambda: Schedule.constant(0.1))
    momentum: float = Field(default=0.9, ge=0, lt=1)
    weight_decay: float = Field(default=2e-4, ge=0)
    attack: AttackConfig
    tau_schedule: Schedule = Field(default_factory=lambda: Schedule.constant(0))
    epsilon_schedule: Optional[Schedule] = None
    eval_attack: Optional[AttackConfig] = None
    seed: int = Field(default=0, ge=0)
    threads: int = Field(default=1, ge=1)

    @model_validator(mode='after')
    def _check_schedules(self) -> "TrainConfig":
        steps = self.attack.steps
        for tau in self.tau_schedule.values():
            if tau != int(tau) or not 0 <= tau <= steps:
                raise ValueError(f"tau schedule values must be integers in [0, K={steps}], got {tau}")
        if self.epsilon_schedule is not None and min(self.epsilon_schedule.values()) < 0:
            raise ValueError("epsilon schedule values must be non-negative")
        if any(lr <= 0 for lr in self.lr_schedule.values()):
            raise ValueError("learning rates must be positive")
        if self.method.family == 'trades' and self.attack.search != 'pgd':
            raise ValueError(f"{self.method.name} generates its data with KL-PGD, not {self.attack.search}")
        if self.method.family != 'trades' and self.attack.loss == 'kl':
            raise ValueError(f"the kl attack loss belongs to the trades family, not {self.method.name}")
        if self.attack.search == 'unprojected' and self.method.name != 'fat':
            raise ValueError("the unprojected searcher is only used to train fat")
        if self.attack.search == 'fgsm':
            raise ValueError("training attacks are PGD searches; fgsm is evaluation-only")
        return self

    def epoch_tau(self, epoch: int) -> int:
        if not self.method.friendly:
            return self.attack.steps
        return int(self.tau_schedule.lookup(epoch))

    def epoch_epsilon(self, epoch: int) -> float:
        if self.epsilon_schedule is None:
            return self.attack.epsilon
        return float(self.epsilon_schedule.lookup(epoch))

    def epoch_attack(self, epoch: int) -> AttackConfig:
        """
        Training attack for one epoch

        Baselines run PGD-K-tau with tau = K, which is plain PGD-K; the trades
        family ascends KL from a gaussian start.
        """
        changes = {'tau': self.epoch_tau(epoch), 'epsilon': self.epoch_epsilon(epoch)}
        if self.method.family == 'trades':
            changes.update(loss='kl', init='gaussian')
        return self.attack.updated(**changes)

    @property
    def evaluation_attack(self) -> AttackConfig:
        """eval_attack, or PGD-20 with random start at the training radius"""
        if self.eval_attack is not None:
            return self.eval_attack
        return preset('pgd20', self.attack.epsilon, domain_box=self.attack.domain_box)

    def updated(self, **changes) -> "TrainConfig":
        return TrainConfig.model_validate({**self.model_dump(), **changes})

    def lr_at(self, epoch: int) -> float:
        return self.lr_schedule.lookup(epoch)

