"""
Fully-connected ReLU classifier with gradients for parameters and inputs.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from core_nn import tensor as ops
from core_nn.errors import NonFiniteError, ShapeError
from core_nn.tensor import Tape, Tensor
from losses import objectives


class MlpSpec(BaseModel):
    """Architecture of a fully-connected classifier (input dim first, class count last)"""

    model_config = ConfigDict(extra='forbid', frozen=True)

    layer_widths: Tuple[int, ...]
    activation: Literal['relu'] = 'relu'

    @field_validator('layer_widths')
    @classmethod
    def _check_widths(cls, widths: Tuple[int, ...]) -> Tuple[int, ...]:
        if len(widths) < 2:
            raise ValueError("layer_widths needs at least the input dim and the class count")
        if any(width <= 0 for width in widths):
            raise ValueError(f"every layer width must be positive, got {list(widths)}")
        if widths[-1] < 2:
            raise ValueError("a classifier needs at least two classes")
        return widths

    @property
    def input_dim(self) -> int:
        return self.layer_widths[0]

    @property
    def class_count(self) -> int:
        return self.layer_widths[-1]

    @property
    def hidden_layers(self) -> int:
        return len(self.layer_widths) - 2

    def layer_shapes(self) -> List[Tuple[int, int]]:
        """(fan_out, fan_in) of every weight matrix"""
        widths = self.layer_widths
        return [(widths[i + 1], widths[i]) for i in range(len(widths) - 1)]


def _frozen_copy(array) -> np.ndarray:
    out = np.array(array, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Immutable weights and biases of an MlpSpec network"""

    spec: MlpSpec
    weights: Tuple[np.ndarray, ...]
    biases: Tuple[np.ndarray, ...]
    lineage: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        weights = tuple(_frozen_copy(w) for w in self.weights)
        biases = tuple(_frozen_copy(b) for b in self.biases)
        shapes = self.spec.layer_shapes()
        if len(weights) != len(shapes) or len(biases) != len(shapes):
            raise ShapeError(f"expected {len(shapes)} layers, got {len(weights)} weights and {len(biases)} biases")
        for layer, ((fan_out, fan_in), w, b) in enumerate(zip(shapes, weights, biases)):
            if w.shape != (fan_out, fan_in) or b.shape != (fan_out,):
                raise ShapeError(
                    f"layer {layer}: weight {w.shape} / bias {b.shape} do not match "
                    f"({fan_out}, {fan_in}) / ({fan_out},)")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise NonFiniteError(f"layer {layer} holds non-finite parameters")
        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, 'biases', biases)
        object.__setattr__(self, 'lineage', dict(self.lineage))

    def arrays(self) -> List[np.ndarray]:
        """Tensors in manifest order: weight then bias, layer by layer"""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def names(self) -> List[str]:
        out = []
        for layer in range(len(self.weights)):
            out.extend((f"layers.{layer}.weight", f"layers.{layer}.bias"))
        return out

    @classmethod
    def from_arrays(cls, spec: MlpSpec, arrays: Sequence[np.ndarray],
                    lineage: Optional[Dict[str, Any]] = None) -> "ModelParams":
        return cls(spec=spec, weights=tuple(arrays[0::2]), biases=tuple(arrays[1::2]),
                   lineage=lineage or {})

    def replace(self, arrays: Sequence[np.ndarray], **lineage) -> "ModelParams":
        return ModelParams.from_arrays(self.spec, arrays, {**self.lineage, **lineage})


@dataclass(frozen=True)
class ForwardRecord:
    """Logits plus the post-activation output of every hidden layer"""

    logits: np.ndarray
    hidden: List[np.ndarray]


@dataclass(frozen=True, eq=False)
class ParamObjective:
    """Composite training loss; `natural` rows are required by trades and mart"""

    kind: Literal['ce', 'trades', 'mart'] = 'ce'
    beta: float = 0.0
    natural: Optional[np.ndarray] = None

    @classmethod
    def ce(cls) -> "ParamObjective":
        return cls('ce')

    @classmethod
    def trades(cls, beta: float, natural) -> "ParamObjective":
        return cls('trades', beta, np.asarray(natural, dtype=np.float64))

    @classmethod
    def mart(cls, beta: float, natural) -> "ParamObjective":
        return cls('mart', beta, np.asarray(natural, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class InputObjective:
    """Loss differentiated with respect to the input point"""

    kind: Literal['ce', 'kl', 'cw']
    label: Optional[int] = None
    p_ref: Optional[np.ndarray] = None
    kappa: float = 0.0

    @classmethod
    def ce(cls, label: int) -> "InputObjective":
        return cls('ce', label=label)

    @classmethod
    def kl(cls, p_ref) -> "InputObjective":
        return cls('kl', p_ref=np.asarray(p_ref, dtype=np.float64))

    @classmethod
    def cw(cls, label: int, kappa: float = 0.0) -> "InputObjective":
        return cls('cw', label=label, kappa=kappa)


@dataclass(frozen=True)
class ParamGradients:
    """Mean batch loss and its gradient, one array per parameter tensor"""

    loss: float
    arrays: List[np.ndarray]


def init_params(spec: MlpSpec, seed: int) -> ModelParams:
    """
    Draw weights uniformly from [-sqrt(6/fan_in), +sqrt(6/fan_in)], biases zero

    Args:
        spec: Network architecture
        seed: Seed of the generator, fully determines the result

    Returns:
        Fresh parameter set
    """
    if any(width <= 0 for width in spec.layer_widths):
        raise ValueError(f"every layer width must be positive, got {list(spec.layer_widths)}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_out, fan_in in spec.layer_shapes():
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return ModelParams(spec=spec, weights=tuple(weights), biases=tuple(biases),
                       lineage={'init_seed': int(seed)})


def _as_input(params: ModelParams, x) -> np.ndarray:
    data = np.asarray(x, dtype=np.float64)
    if data.ndim not in (1, 2) or data.shape[-1] != params.spec.input_dim:
        raise ShapeError(f"input of shape {data.shape} does not match input dim {params.spec.input_dim}")
    return data


def _ensure_finite(what: str, *arrays: np.ndarray) -> None:
    for array in arrays:
        if not np.all(np.isfinite(array)):
            raise NonFiniteError(f"{what} produced non-finite values")


def _graph(weights: Sequence[Tensor], biases: Sequence[Tensor], x: Tensor) -> Tuple[Tensor, List[Tensor]]:
    hidden = []
    h = x
    for layer, (w, b) in enumerate(zip(weights, biases)):
        z = ops.linear(h, w, b)
        if layer == len(weights) - 1:
            return z, hidden
        h = ops.relu(z)
        hidden.append(h)
    raise ShapeError("network has no layers")


def forward(params: ModelParams, x) -> ForwardRecord:
    """
    Evaluate the network on one row (d,) or a batch (N, d)

    Args:
        params: Network parameters
        x: Input point(s)

    Returns:
        Logits and hidden activations
    """
    data = _as_input(params, x)
    logits, hidden = _graph(params.weights, params.biases, Tensor(data))
    _ensure_finite("forward", logits.data)
    return ForwardRecord(logits=logits.data, hidden=[h.data for h in hidden])


def predict(params: ModelParams, x) -> np.ndarray:
    """Predicted label(s), smallest index on ties"""
    return objectives.predict(forward(params, x).logits)


def objective_loss(objective: ParamObjective, logits_adv, logits_nat, y) -> Tensor:
    """Per-example value of a ParamObjective given adversarial and natural logits"""
    if objective.kind == 'ce':
        return objectives.cross_entropy(logits_adv, y)
    if logits_nat is None:
        raise ValueError(f"{objective.kind} objective needs natural logits")
    if objective.kind == 'trades':
        return objectives.trades_loss(logits_nat, logits_adv, y, objective.beta)
    if objective.kind == 'mart':
        return objectives.mart_loss(logits_adv, logits_nat, y, objective.beta)
    raise ValueError(f"unknown objective kind: {objective.kind}")


def _stack_batch(params: ModelParams, batch) -> Tuple[np.ndarray, np.ndarray]:
    if len(batch) == 0:
        raise ValueError("batch is empty")
    xs = _as_input(params, np.stack([np.asarray(x, dtype=np.float64) for x, _ in batch]))
    ys = np.asarray([int(y) for _, y in batch], dtype=np.int64)
    return xs, ys


def grad_params(params: ModelParams, batch: Sequence[Tuple[Any, int]],
                objective: ParamObjective = ParamObjective()) -> ParamGradients:
    """
    Mean gradient over a batch of the selected composite loss

    Args:
        params: Network parameters (not modified)
        batch: (x, y) pairs; x is the point the model is trained on
        objective: ce, trades or mart; the latter two carry natural rows aligned with batch

    Returns:
        Mean loss and gradients in manifest order
    """
    xs, ys = _stack_batch(params, batch)
    natural = None
    if objective.kind != 'ce':
        if objective.natural is None:
            raise ValueError(f"{objective.kind} objective needs natural rows")
        natural = _as_input(params, objective.natural)
        if natural.shape != xs.shape:
            raise ShapeError(f"natural rows {natural.shape} are not aligned with batch {xs.shape}")

    tape = Tape()
    weights = [tape.watch(w) for w in params.weights]
    biases = [tape.watch(b) for b in params.biases]
    logits_adv, _ = _graph(weights, biases, Tensor(xs))
    logits_nat = _graph(weights, biases, Tensor(natural))[0] if natural is not None else None
    loss = ops.reduce_mean(objective_loss(objective, logits_adv, logits_nat, ys))

    leaves = []
    for w, b in zip(weights, biases):
        leaves.extend((w, b))
    grads = tape.gradient(loss, leaves)
    _ensure_finite("parameter gradient", loss.data, *grads)
    return ParamGradients(loss=loss.item(), arrays=grads)


def _input_loss(objective: InputObjective, logits: Tensor, class_count: int) -> Tensor:
    if objective.kind == 'kl':
        p_ref = objective.p_ref
        if p_ref is None or p_ref.shape != (class_count,):
            raise ShapeError(f"kl reference must have shape ({class_count},)")
        if not objectives.is_simplex(p_ref):
            raise ValueError("kl reference is not a probability vector")
        return objectives.kl_div(p_ref, logits)
    if objective.label is None:
        raise ValueError(f"{objective.kind} objective needs a label")
    if objective.kind == 'ce':
        return objectives.cross_entropy(logits, objective.label)
    if objective.kind == 'cw':
        return objectives.cw_margin(logits, objective.label, objective.kappa)
    raise ValueError(f"unknown input objective kind: {objective.kind}")


def value_and_grad_input(params: ModelParams, x, objective: InputObjective) -> Tuple[float, np.ndarray]:
    """Loss at x and its gradient with respect to x"""
    data = _as_input(params, x)
    if data.ndim != 1:
        raise ShapeError("input gradients are taken one point at a time")
    tape = Tape()
    point = tape.watch(data)
    logits, _ = _graph(params.weights, params.biases, point)
    loss = _input_loss(objective, logits, params.spec.class_count)
    (grad,) = tape.gradient(loss, [point])
    _ensure_finite("input gradient", loss.data, grad)
    return loss.item(), grad


def grad_input(params: ModelParams, x, objective: InputObjective) -> np.ndarray:
    """
    Gradient of a scalar loss with respect to the input point

    Args:
        params: Network parameters
        x: Single input row
        objective: ce(y), kl(p_ref) with p_ref held constant, or cw(y, kappa)

    Returns:
        Array shaped like x
    """
    return value_and_grad_input(params, x, objective)[1]


def input_loss(params: ModelParams, x, objective: InputObjective) -> float:
    """Value of an InputObjective at x, without recording a tape"""
    data = _as_input(params, x)
    logits = forward(params, data).logits
    return float(_input_loss(objective, Tensor(logits), params.spec.class_count))
