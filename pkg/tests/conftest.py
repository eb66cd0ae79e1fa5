"""
Shared fixtures for the lab test suite.
"""
import sys
from pathlib import Path

import numpy as np
import pytest
from loguru import logger

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from attacks.config import AttackConfig, preset  # noqa: E402
from core_nn.network import MlpSpec, ModelParams, init_params  # noqa: E402
from data.generators import gen_gaussians, gen_spirals  # noqa: E402
from training.config import Method, Schedule, TrainConfig  # noqa: E402
from training.trainer import train  # noqa: E402

KINK_MARGIN = 1e-3


def preactivations(params: ModelParams, x) -> list:
    """Hidden pre-activations recomputed with plain numpy"""
    h = np.asarray(x, dtype=np.float64)
    out = []
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        z = h @ w.T + b
        out.append(z)
        h = np.maximum(z, 0.0)
    return out


def near_kink(params: ModelParams, x, margin: float = KINK_MARGIN) -> bool:
    return any(np.any(np.abs(z) < margin) for z in preactivations(params, x))


def natural_config(epochs: int = 15, seed: int = 1, lr: float = 0.05, batch_size: int = 16) -> TrainConfig:
    """Plain training: an attack with no steps and no evaluation attack"""
    return TrainConfig(method=Method(name='standard_at'), epochs=epochs, batch_size=batch_size,
                       lr_schedule=Schedule.constant(lr), attack=AttackConfig(epsilon=0.0, steps=0),
                       eval_attack=preset('none', 0.0), seed=seed)


@pytest.fixture
def kink_check():
    return near_kink


@pytest.fixture
def logistic_params() -> ModelParams:
    """Two-class linear model whose class-1 logit is 2*x0 - x1"""
    spec = MlpSpec(layer_widths=(2, 2))
    return ModelParams(spec=spec, weights=(np.array([[0.0, 0.0], [2.0, -1.0]]),), biases=(np.zeros(2),))


@pytest.fixture
def constant_params() -> ModelParams:
    """Predicts class 0 everywhere"""
    spec = MlpSpec(layer_widths=(2, 3, 2))
    return ModelParams(spec=spec, weights=(np.zeros((3, 2)), np.zeros((2, 3))), biases=(np.zeros(3), np.array([1.0, 0.0])))


@pytest.fixture
def small_params() -> ModelParams:
    return init_params(MlpSpec(layer_widths=(2, 6, 3)), seed=11)


@pytest.fixture(scope='session')
def gaussian_data():
    return gen_gaussians(60, [[-1.5, 0.0], [1.5, 0.0]], 0.6, seed=3)


@pytest.fixture(scope='session')
def trained_params(gaussian_data) -> ModelParams:
    params, _ = train(gaussian_data, natural_config(), MlpSpec(layer_widths=(2, 16, 2)))
    return params


@pytest.fixture(scope='session')
def spiral_data():
    return gen_spirals(200, turns=1.0, noise=0.0, seed=4)


@pytest.fixture(scope='session')
def spiral_params(spiral_data) -> ModelParams:
    params, _ = train(spiral_data, natural_config(epochs=400, lr=0.01), MlpSpec(layer_widths=(2, 32, 32, 2)))
    return params


@pytest.fixture(scope='session')
def natural_train_config():
    return natural_config


@pytest.fixture
def log_messages():
    messages = []
    sink = logger.add(lambda message: messages.append(str(message)), format="{message}", level='DEBUG')
    yield messages
    logger.remove(sink)
