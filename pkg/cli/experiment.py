"""
JSON experiment documents: dataset, model, training and evaluation sections.
"""
import json
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from attacks.config import EVAL_PRESETS, DomainBox, preset
from core_nn.errors import ConfigError
from core_nn.network import MlpSpec
from data.csv_io import load_csv
from data.dataset import Dataset, split
from data.generators import gen_gaussians, gen_spirals
from training.config import TrainConfig


class DatasetSpec(BaseModel):
    """Where the examples come from and how they are split"""

    model_config = ConfigDict(extra='forbid', frozen=True)

    kind: Literal['gaussians', 'spirals', 'csv'] = 'gaussians'
    n_per_class: int = Field(default=200, ge=1)
    centers: List[List[float]] = Field(default_factory=lambda: [[-2.0, 0.0], [2.0, 0.0]])
    sigma: float = Field(default=1.0, gt=0)
    turns: float = Field(default=1.0, gt=0)
    noise: float = Field(default=0.0, ge=0)
    radius: float = Field(default=4.0, gt=0)
    path: Optional[str] = None
    class_count: Optional[int] = Field(default=None, ge=2)
    seed: int = Field(default=0, ge=0)
    test_fraction: float = Field(default=0.25, gt=0, lt=1)
    domain_box: Optional[DomainBox] = None

    @model_validator(mode='after')
    def _check_source(self) -> "DatasetSpec":
        if self.kind == 'csv':
            if self.path is None:
                raise ValueError("a csv dataset needs a path")
            if not Path(self.path).is_file():
                raise ValueError(f"dataset file not found: {self.path}")
        if self.kind == 'gaussians' and len({len(c) for c in self.centers}) != 1:
            raise ValueError("all gaussian centers need the same dimension")
        return self

    @property
    def known_dim(self) -> Optional[int]:
        if self.kind == 'gaussians':
            return len(self.centers[0]) if self.centers else None
        if self.kind == 'spirals':
            return 2
        return None

    @property
    def known_classes(self) -> Optional[int]:
        if self.kind == 'gaussians':
            return len(self.centers)
        if self.kind == 'spirals':
            return 2
        return self.class_count

    def build(self) -> Dataset:
        if self.kind == 'gaussians':
            return gen_gaussians(self.n_per_class, self.centers, self.sigma, self.seed, domain_box=self.domain_box)
        if self.kind == 'spirals':
            dataset = gen_spirals(self.n_per_class, self.turns, self.noise, self.seed, radius=self.radius)
            return Dataset(dataset.features, dataset.labels, dataset.class_count, self.domain_box)
        return load_csv(self.path, class_count=self.class_count, domain_box=self.domain_box)

    def build_split(self) -> Tuple[Dataset, Dataset]:
        """(train, test) with the stratified split seeded by the dataset seed"""
        return split(self.build(), self.test_fraction, self.seed)


class EvaluationSpec(BaseModel):
    """Attack presets reported after training; epsilon defaults to the training radius"""

    model_config = ConfigDict(extra='forbid', frozen=True)

    presets: List[str] = Field(default_factory=lambda: list(EVAL_PRESETS))
    epsilon: Optional[float] = Field(default=None, ge=0)
    alpha: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode='after')
    def _check_presets(self) -> "EvaluationSpec":
        for name in self.presets:
            preset(name, 1.0)
        return self


class ExperimentConfig(BaseModel):
    """One run: validated in full before any computation starts"""

    model_config = ConfigDict(extra='forbid', frozen=True)

    dataset: DatasetSpec = Field(default_factory=DatasetSpec)
    model: MlpSpec
    training: TrainConfig
    evaluation: EvaluationSpec = Field(default_factory=EvaluationSpec)
    output_dir: Optional[str] = None

    @model_validator(mode='after')
    def _check_shapes(self) -> "ExperimentConfig":
        dim, classes = self.dataset.known_dim, self.dataset.known_classes
        if dim is not None and dim != self.model.input_dim:
            raise ValueError(f"dataset dim {dim} does not match model input dim {self.model.input_dim}")
        if classes is not None and classes != self.model.class_count:
            raise ValueError(f"dataset has {classes} classes, model outputs {self.model.class_count}")
        return self

    @property
    def eval_epsilon(self) -> float:
        if self.evaluation.epsilon is not None:
            return self.evaluation.epsilon
        return self.training.attack.epsilon

    def with_overrides(self, seed: Optional[int] = None, threads: Optional[int] = None,
                       output_dir: Optional[str] = None) -> "ExperimentConfig":
        """Apply command-line overrides and push the dataset box into the attacks"""
        document = self.model_dump()
        training = document['training']
        if seed is not None:
            training['seed'] = seed
        if threads is not None:
            training['threads'] = threads
        if output_dir is not None:
            document['output_dir'] = output_dir
        box = document['dataset']['domain_box']
        if box is not None:
            for key in ('attack', 'eval_attack'):
                if training[key] is not None and training[key]['domain_box'] is None:
                    training[key]['domain_box'] = box
        return ExperimentConfig.model_validate(document)


def load_experiment(path: Union[str, Path]) -> ExperimentConfig:
    """
    Read and validate an experiment document

    Raises:
        ConfigError: The file is missing or not JSON
        pydantic.ValidationError: The document is invalid
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        document = json.loads(path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from e
    return ExperimentConfig.model_validate(document)
