"""Data models for the readout decoder and its training."""

from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..tensor_core import FeatureMap, SaliencyMap, FixationMap
from ..error_handling.exceptions import ValidationError, ShapeMismatchError

LOSS_KINDS = ("kld", "eml")


@dataclass(frozen=True, eq=False)
class DenseLayer:
    """Per-pixel channel mixing: out = W @ in + b."""
    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        weight = np.array(self.weight, dtype=np.float64, copy=True)
        bias = np.array(self.bias, dtype=np.float64, copy=True).reshape(-1)
        if weight.ndim != 2 or weight.shape[0] != bias.shape[0]:
            raise ShapeMismatchError(f"Layer weight {weight.shape} does not match bias {bias.shape}",
                                     field_name="layer", expected=(weight.shape[0],),
                                     actual=bias.shape)
        if not (np.all(np.isfinite(weight)) and np.all(np.isfinite(bias))):
            raise ValidationError("Layer parameters must be finite",
                                  field_name="layer", validation_rule="finite")
        weight.setflags(write=False)
        bias.setflags(write=False)
        object.__setattr__(self, "weight", weight)
        object.__setattr__(self, "bias", bias)

    @property
    def in_channels(self) -> int:
        return self.weight.shape[1]

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]

    @property
    def size(self) -> int:
        return self.weight.size + self.bias.size


@dataclass(frozen=True)
class CenterBias:
    """Axis-aligned Gaussian prior in pixel index coordinates, added to the logits in log space.

    The shape comes from the fitted fixations; ``weight`` is trained with the layers.
    """
    mu_x: float
    mu_y: float
    sigma_x: float
    sigma_y: float
    weight: float = 1.0

    def __post_init__(self):
        values = (self.mu_x, self.mu_y, self.sigma_x, self.sigma_y, self.weight)
        if not all(np.isfinite(v) for v in values):
            raise ValidationError(f"CenterBias fields must be finite: {self}",
                                  field_name="center_bias", validation_rule="finite")
        if self.sigma_x <= 0 or self.sigma_y <= 0:
            raise ValidationError(f"CenterBias sigmas must be > 0: {self}",
                                  field_name="center_bias", validation_rule="positive_sigma")

    def log_prior(self, height: int, width: int) -> np.ndarray:
        """Unnormalized log density over a height x width grid."""
        rows = (np.arange(height) - self.mu_y) / self.sigma_y
        cols = (np.arange(width) - self.mu_x) / self.sigma_x
        return -0.5 * (rows[:, None] ** 2 + cols[None, :] ** 2)


@dataclass(frozen=True, eq=False)
class ReadoutModel:
    """Stack of per-pixel layers plus post-processing (prior and smoothing)."""
    layers: Tuple[DenseLayer, ...]
    center_bias: Optional[CenterBias] = None
    smooth_sigma: float = 0.0

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValidationError("ReadoutModel needs at least one layer",
                                  field_name="layers", validation_rule="nonempty")
        for index in range(1, len(layers)):
            if layers[index].in_channels != layers[index - 1].out_channels:
                raise ShapeMismatchError(
                    f"Layer {index} expects {layers[index].in_channels} inputs, "
                    f"layer {index - 1} produces {layers[index - 1].out_channels}",
                    field_name="layers", expected=(layers[index - 1].out_channels,),
                    actual=(layers[index].in_channels,))
        if layers[-1].out_channels != 1:
            raise ValidationError(f"Last layer must produce 1 channel, got {layers[-1].out_channels}",
                                  field_name="layers", validation_rule="single_output")
        if not np.isfinite(self.smooth_sigma) or self.smooth_sigma < 0:
            raise ValidationError(f"smooth_sigma must be >= 0: {self.smooth_sigma}",
                                  field_name="smooth_sigma", validation_rule="min_0")
        object.__setattr__(self, "layers", layers)

    @property
    def in_channels(self) -> int:
        return self.layers[0].in_channels

    @property
    def widths(self) -> List[int]:
        return [layer.out_channels for layer in self.layers]

    @property
    def parameter_count(self) -> int:
        """Layer parameters, plus the prior weight when a center bias is attached."""
        return sum(layer.size for layer in self.layers) + (1 if self.center_bias is not None else 0)

    def to_vector(self) -> np.ndarray:
        """All weights and biases, layer by layer, weight (row-major) before bias.

        The center-bias weight, when present, is the last entry.
        """
        parts = []
        for layer in self.layers:
            parts.append(layer.weight.ravel())
            parts.append(layer.bias)
        if self.center_bias is not None:
            parts.append(np.array([self.center_bias.weight]))
        return np.concatenate(parts)

    def with_parameters(self, vector: np.ndarray) -> "ReadoutModel":
        """Copy of this model with parameters taken from a to_vector() layout."""
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (self.parameter_count,):
            raise ShapeMismatchError(f"Parameter vector {vector.shape} != ({self.parameter_count},)",
                                     field_name="parameters", expected=(self.parameter_count,),
                                     actual=vector.shape)
        layers = []
        offset = 0
        for layer in self.layers:
            w_size = layer.weight.size
            weight = vector[offset:offset + w_size].reshape(layer.weight.shape)
            offset += w_size
            bias = vector[offset:offset + layer.bias.size]
            offset += layer.bias.size
            layers.append(DenseLayer(weight, bias))
        center_bias = self.center_bias
        if center_bias is not None:
            center_bias = replace(center_bias, weight=float(vector[offset]))
        return replace(self, layers=tuple(layers), center_bias=center_bias)

    def with_post_processing(self, center_bias: Optional[CenterBias] = None,
                             smooth_sigma: Optional[float] = None) -> "ReadoutModel":
        return replace(self, center_bias=center_bias,
                       smooth_sigma=self.smooth_sigma if smooth_sigma is None else smooth_sigma)


@dataclass
class ReadoutConfig:
    """Architecture and post-processing defaults for new models."""
    hidden_widths: List[int] = field(default_factory=lambda: [16, 8, 4, 1])
    smooth_sigma: float = 0.0
    center_bias: bool = False
    init_seed: int = 0


@dataclass
class TrainConfig:
    """Optimizer and loop settings."""
    learning_rate: float = 1e-4
    batch_size: int = 2
    epochs: int = 10
    loss: str = "kld"
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    kld_eps: float = 1e-7

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValidationError(f"learning_rate must be >= 0: {self.learning_rate}",
                                  field_name="learning_rate", validation_rule="min_0")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValidationError("epochs and batch_size must be >= 1",
                                  field_name="epochs", validation_rule="min_1")
        if self.loss not in LOSS_KINDS:
            raise ValidationError(f"Unknown loss {self.loss!r}; expected one of {LOSS_KINDS}",
                                  field_name="loss", field_value=self.loss,
                                  validation_rule="|".join(LOSS_KINDS))


@dataclass(frozen=True, eq=False)
class TrainingSample:
    """One fused input with its ground truth."""
    features: FeatureMap
    saliency: SaliencyMap
    fixations: FixationMap
    scene_id: str = ""

    def __post_init__(self):
        spatial = (self.features.height, self.features.width)
        for name, shape in (("saliency", self.saliency.shape), ("fixations", self.fixations.shape)):
            if tuple(shape) != spatial:
                raise ShapeMismatchError(
                    f"Scene {self.scene_id or '?'}: {name} {tuple(shape)} does not match features {spatial}",
                    field_name=name, expected=spatial, actual=shape)


@dataclass(frozen=True, eq=False)
class ModelGradients:
    """Gradients laid out like ReadoutModel.to_vector()."""
    weights: Tuple[np.ndarray, ...]
    biases: Tuple[np.ndarray, ...]
    center_bias_weight: Optional[float] = None

    def to_vector(self) -> np.ndarray:
        parts = []
        for dw, db in zip(self.weights, self.biases):
            parts.append(dw.ravel())
            parts.append(db)
        if self.center_bias_weight is not None:
            parts.append(np.array([self.center_bias_weight]))
        return np.concatenate(parts)


@dataclass
class TrainingResult:
    """Outcome of a training run."""
    model: ReadoutModel
    train_trace: List[float]
    val_trace: List[float] = field(default_factory=list)
    best_epoch: Optional[int] = None


@dataclass
class GradientCheckReport:
    """Finite-difference comparison for one model instance."""
    loss: str
    max_relative_error: float
    checked: int
    skipped: int
    worst_parameter: int = -1

    def passed(self, tolerance: float) -> bool:
        return self.max_relative_error < tolerance


def samples_from(items: Sequence[Tuple[FeatureMap, SaliencyMap, FixationMap]]) -> List[TrainingSample]:
    """Wrap (features, saliency, fixations) triples as TrainingSample objects."""
    return [item if isinstance(item, TrainingSample) else TrainingSample(*item) for item in items]
