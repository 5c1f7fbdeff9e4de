"""Readout forward pass and analytic backward pass."""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .data_models import DenseLayer, ReadoutModel, CenterBias, ModelGradients, ReadoutConfig
from .losses import loss_with_grad, DEFAULT_KLD_EPS
from ..tensor_core import FeatureMap, SaliencyMap, FixationMap, gaussian_blur, softmax_2d, as_array
from ..error_handling.exceptions import ShapeMismatchError

logger = logging.getLogger(__name__)


def initialize_model(in_channels: int, hidden_widths: Sequence[int] = (16, 8, 4, 1),
                     seed: int = 0, center_bias: Optional[CenterBias] = None,
                     smooth_sigma: float = 0.0) -> ReadoutModel:
    """He-initialized weights, zero biases."""
    rng = np.random.default_rng(seed)
    layers = []
    fan_in = in_channels
    for width in hidden_widths:
        weight = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(width, fan_in))
        layers.append(DenseLayer(weight, np.zeros(width)))
        fan_in = width
    return ReadoutModel(tuple(layers), center_bias=center_bias, smooth_sigma=smooth_sigma)


def model_from_config(in_channels: int, config: ReadoutConfig,
                      center_bias: Optional[CenterBias] = None) -> ReadoutModel:
    return initialize_model(in_channels, config.hidden_widths, config.init_seed,
                            center_bias=center_bias if config.center_bias else None,
                            smooth_sigma=config.smooth_sigma)


@dataclass
class ForwardCache:
    """Intermediate values of one forward pass, kept for backward."""
    inputs: np.ndarray
    pre_activations: List[np.ndarray]
    activations: List[np.ndarray]
    logits: np.ndarray
    prediction: SaliencyMap


def _features(fused: Union[FeatureMap, np.ndarray]) -> np.ndarray:
    return fused.data if isinstance(fused, FeatureMap) else FeatureMap(fused).data


def forward_cached(model: ReadoutModel, fused: Union[FeatureMap, np.ndarray]) -> ForwardCache:
    data = _features(fused)
    height, width, channels = data.shape
    if channels != model.in_channels:
        raise ShapeMismatchError(f"Model expects {model.in_channels} channels, input has {channels}",
                                 field_name="fused", expected=(model.in_channels,), actual=(channels,))

    hidden = data.reshape(height * width, channels)
    inputs = hidden
    pre_activations = []
    activations = []
    last = len(model.layers) - 1
    for index, layer in enumerate(model.layers):
        z = hidden @ layer.weight.T + layer.bias
        pre_activations.append(z)
        hidden = z if index == last else np.maximum(z, 0.0)
        activations.append(hidden)

    raw = hidden.reshape(height, width)
    if model.center_bias is not None and model.center_bias.weight != 0.0:
        raw = raw + model.center_bias.weight * model.center_bias.log_prior(height, width)
    logits = gaussian_blur(raw, model.smooth_sigma)
    return ForwardCache(inputs, pre_activations, activations, logits, softmax_2d(logits))


def forward(model: ReadoutModel, fused: Union[FeatureMap, np.ndarray]) -> Tuple[np.ndarray, SaliencyMap]:
    """Logits after prior and smoothing, and the softmax prediction."""
    cache = forward_cached(model, fused)
    return cache.logits, cache.prediction


def backward_from_cache(model: ReadoutModel, cache: ForwardCache,
                        grad_prediction: np.ndarray) -> ModelGradients:
    """Chain dLoss/dPrediction back through softmax, blur and the layer stack."""
    p = cache.prediction.data
    grad_logits = p * (grad_prediction - np.sum(p * grad_prediction))
    # The blur operator is symmetric, so it is its own adjoint.
    grad_raw = gaussian_blur(grad_logits, model.smooth_sigma)

    delta = grad_raw.reshape(-1, 1)
    weights: List[np.ndarray] = [None] * len(model.layers)
    biases: List[np.ndarray] = [None] * len(model.layers)
    for index in range(len(model.layers) - 1, -1, -1):
        below = cache.activations[index - 1] if index > 0 else cache.inputs
        weights[index] = delta.T @ below
        biases[index] = delta.sum(axis=0)
        if index > 0:
            delta = (delta @ model.layers[index].weight) * (cache.pre_activations[index - 1] > 0.0)

    prior_weight = None
    if model.center_bias is not None:
        prior_weight = float(np.sum(grad_raw * model.center_bias.log_prior(*grad_raw.shape)))
    return ModelGradients(tuple(weights), tuple(biases), prior_weight)


def backward(model: ReadoutModel, fused: Union[FeatureMap, np.ndarray],
             q: Union[SaliencyMap, np.ndarray], f: Union[FixationMap, np.ndarray],
             loss: str = "kld", eps: float = DEFAULT_KLD_EPS) -> Tuple[float, ModelGradients]:
    """Loss value and its exact gradient w.r.t. every weight and bias (and the prior weight)."""
    cache = forward_cached(model, fused)
    q_data = as_array(q)
    f_data = as_array(f)
    for name, shape in (("ground truth", q_data.shape), ("fixations", f_data.shape)):
        if shape != cache.logits.shape:
            raise ShapeMismatchError(f"{name} {shape} does not match prediction {cache.logits.shape}",
                                     field_name=name, expected=cache.logits.shape, actual=shape)
    value, grad_p = loss_with_grad(loss, cache.prediction.data, q_data, f_data, eps)
    return value, backward_from_cache(model, cache, grad_p)


def loss_value(model: ReadoutModel, fused: Union[FeatureMap, np.ndarray],
               q: Union[SaliencyMap, np.ndarray], f: Union[FixationMap, np.ndarray],
               loss: str = "kld", eps: float = DEFAULT_KLD_EPS) -> float:
    prediction = forward_cached(model, fused).prediction.data
    return loss_with_grad(loss, prediction, as_array(q), as_array(f), eps)[0]
