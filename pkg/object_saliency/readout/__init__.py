"""Trainable per-pixel readout with center bias, smoothing and KLD/EML losses."""

from .data_models import (
    DenseLayer,
    CenterBias,
    ReadoutModel,
    ReadoutConfig,
    TrainConfig,
    TrainingSample,
    ModelGradients,
    TrainingResult,
    GradientCheckReport,
    LOSS_KINDS,
    samples_from,
)
from .losses import kld_loss, cc_prime, nss_prime, eml_loss, loss_with_grad
from .model import initialize_model, model_from_config, forward, forward_cached, backward, loss_value
from .optimizer import AdamOptimizer
from .trainer import train, mean_loss
from .center_bias import fit_center_bias, average_ground_truth
from .gradcheck import check_gradients, run_gradient_suite

__all__ = [
    'DenseLayer',
    'CenterBias',
    'ReadoutModel',
    'ReadoutConfig',
    'TrainConfig',
    'TrainingSample',
    'ModelGradients',
    'TrainingResult',
    'GradientCheckReport',
    'LOSS_KINDS',
    'samples_from',
    'kld_loss',
    'cc_prime',
    'nss_prime',
    'eml_loss',
    'loss_with_grad',
    'initialize_model',
    'model_from_config',
    'forward',
    'forward_cached',
    'backward',
    'loss_value',
    'AdamOptimizer',
    'train',
    'mean_loss',
    'fit_center_bias',
    'average_ground_truth',
    'check_gradients',
    'run_gradient_suite',
]
