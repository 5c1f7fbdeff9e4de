"""Deterministic mini-batch training of the readout."""

import logging
from typing import Optional, Sequence

import numpy as np

from .data_models import ReadoutModel, TrainConfig, TrainingSample, TrainingResult
from .model import backward, loss_value
from .optimizer import AdamOptimizer
from ..error_handling.exceptions import ValidationError, ShapeMismatchError, TrainingDivergedError
from ..performance.monitor import monitor_performance

logger = logging.getLogger(__name__)


def mean_loss(model: ReadoutModel, samples: Sequence[TrainingSample], loss: str, eps: float) -> float:
    """Average loss over samples, summed in list order."""
    total = 0.0
    for sample in samples:
        total += loss_value(model, sample.features, sample.saliency, sample.fixations, loss, eps)
    return total / len(samples)


def _check_dataset(model: ReadoutModel, samples: Sequence[TrainingSample], name: str):
    for sample in samples:
        if sample.features.channels != model.in_channels:
            raise ShapeMismatchError(
                f"{name} scene {sample.scene_id or '?'} has {sample.features.channels} channels, "
                f"model expects {model.in_channels}",
                field_name=name, expected=(model.in_channels,), actual=(sample.features.channels,))


@monitor_performance("train")
def train(model: ReadoutModel, dataset: Sequence[TrainingSample], config: TrainConfig,
          validation: Optional[Sequence[TrainingSample]] = None) -> TrainingResult:
    """Train with Adam; with a validation set the best-validation-KLD epoch is returned.

    ``train_trace[0]`` is the loss before any update, ``train_trace[e]`` the
    loss after epoch e.
    """
    dataset = list(dataset)
    validation = list(validation or [])
    if not dataset:
        raise ValidationError("Training set is empty", field_name="dataset", validation_rule="nonempty")
    _check_dataset(model, dataset, "train")
    _check_dataset(model, validation, "validation")

    rng = np.random.default_rng(config.seed)
    optimizer = AdamOptimizer(model.parameter_count, config.learning_rate,
                              config.beta1, config.beta2, config.adam_eps)
    params = model.to_vector()

    train_trace = [mean_loss(model, dataset, config.loss, config.kld_eps)]
    val_trace = []
    best_model, best_val, best_epoch = None, np.inf, None
    logger.info(f"Training {model.widths} on {len(dataset)} scene(s), initial "
                f"{config.loss} {train_trace[0]:.6f}")

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(dataset))
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            grad = np.zeros_like(params)
            for index in batch:
                sample = dataset[index]
                _, grads = backward(model, sample.features, sample.saliency, sample.fixations,
                                    config.loss, config.kld_eps)
                grad += grads.to_vector()
            grad /= len(batch)
            if not np.all(np.isfinite(grad)):
                raise TrainingDivergedError(f"Non-finite gradient in epoch {epoch}", epoch=epoch)
            params = optimizer.step(params, grad)
            if not np.all(np.isfinite(params)):
                raise TrainingDivergedError(f"Non-finite parameters in epoch {epoch}", epoch=epoch)
            model = model.with_parameters(params)

        epoch_loss = mean_loss(model, dataset, config.loss, config.kld_eps)
        if not np.isfinite(epoch_loss):
            raise TrainingDivergedError(f"Training loss became {epoch_loss} in epoch {epoch}",
                                        epoch=epoch)
        train_trace.append(epoch_loss)

        message = f"epoch {epoch}/{config.epochs}: train {config.loss} {epoch_loss:.6f}"
        if validation:
            val_kld = mean_loss(model, validation, "kld", config.kld_eps)
            val_trace.append(val_kld)
            message += f", val kld {val_kld:.6f}"
            if val_kld < best_val:
                best_model, best_val, best_epoch = model, val_kld, epoch
        logger.info(message)

    if validation and best_model is not None:
        return TrainingResult(best_model, train_trace, val_trace, best_epoch)
    return TrainingResult(model, train_trace, val_trace, config.epochs)
