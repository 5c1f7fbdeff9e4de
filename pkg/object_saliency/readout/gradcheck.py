"""Finite-difference verification of the analytic readout gradients."""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .data_models import ReadoutModel, CenterBias, GradientCheckReport, LOSS_KINDS
from .model import initialize_model, forward_cached, backward
from .losses import loss_with_grad, DEFAULT_KLD_EPS
from ..tensor_core import FeatureMap, softmax_2d
from ..error_handling.exceptions import GradientCheckError

logger = logging.getLogger(__name__)

STEP = 1e-4
RELATIVE_FLOOR = 1e-6


def _activation_pattern(model: ReadoutModel, fused: np.ndarray) -> List[np.ndarray]:
    cache = forward_cached(model, fused)
    return [z > 0.0 for z in cache.pre_activations[:-1]]


def _same_pattern(a: List[np.ndarray], b: List[np.ndarray]) -> bool:
    return all(np.array_equal(x, y) for x, y in zip(a, b))


def check_gradients(model: ReadoutModel, fused: np.ndarray, q: np.ndarray, f: np.ndarray,
                    loss: str = "kld", step: float = STEP,
                    eps: float = DEFAULT_KLD_EPS) -> GradientCheckReport:
    """Compare backward() with central differences on every parameter.

    Uses the fourth-order central stencil at offsets +-step and +-2*step.
    A parameter whose perturbations flip any rectifier is skipped, since the
    loss is not differentiable across the kink.
    """
    _, grads = backward(model, fused, q, f, loss, eps)
    analytic = grads.to_vector()
    base = model.to_vector()
    base_pattern = _activation_pattern(model, fused)

    def evaluate(vector: np.ndarray) -> Tuple[float, bool]:
        perturbed = model.with_parameters(vector)
        cache = forward_cached(perturbed, fused)
        pattern = [z > 0.0 for z in cache.pre_activations[:-1]]
        value = loss_with_grad(loss, cache.prediction.data, q, f, eps)[0]
        return value, _same_pattern(pattern, base_pattern)

    worst, worst_index, checked, skipped = 0.0, -1, 0, 0
    for index in range(base.size):
        values = {}
        smooth = True
        for k in (-2, -1, 1, 2):
            vector = base.copy()
            vector[index] += k * step
            values[k], same = evaluate(vector)
            smooth = smooth and same
        if not smooth:
            skipped += 1
            continue
        numeric = (8.0 * (values[1] - values[-1]) - (values[2] - values[-2])) / (12.0 * step)
        a = analytic[index]
        error = abs(a - numeric) / max(abs(a), abs(numeric), RELATIVE_FLOOR)
        checked += 1
        if error > worst:
            worst, worst_index = error, index

    return GradientCheckReport(loss=loss, max_relative_error=worst, checked=checked,
                               skipped=skipped, worst_parameter=worst_index)


def random_instance(rng: np.random.Generator, widths: Sequence[int], size: int,
                    smooth_sigma: float, with_center_bias: bool):
    """Random model, input, ground-truth distribution and fixation map."""
    in_channels = widths[0]
    center_bias = None
    if with_center_bias:
        center_bias = CenterBias(mu_x=rng.uniform(0, size - 1), mu_y=rng.uniform(0, size - 1),
                                 sigma_x=rng.uniform(1.0, size), sigma_y=rng.uniform(1.0, size),
                                 weight=rng.uniform(0.2, 1.5))
    model = initialize_model(in_channels, list(widths[1:]), seed=int(rng.integers(2 ** 31)),
                             center_bias=center_bias, smooth_sigma=smooth_sigma)
    # Nonzero biases so the check also covers them.
    model = model.with_parameters(model.to_vector() + rng.normal(0.0, 0.1, model.parameter_count))

    fused = FeatureMap(rng.normal(size=(size, size, in_channels)))
    q = softmax_2d(rng.normal(size=(size, size))).data
    f = np.zeros((size, size))
    count = int(rng.integers(1, size * size // 2))
    f.flat[rng.choice(size * size, size=count, replace=False)] = 1.0
    return model, fused, q, f


def run_gradient_suite(n_models: int = 20, seed: int = 0,
                       widths: Sequence[int] = (3, 16, 8, 4, 1), size: int = 6,
                       smooth_sigma: float = 1.0, with_center_bias: bool = True,
                       losses: Sequence[str] = LOSS_KINDS, tolerance: float = 1e-4,
                       raise_on_failure: bool = True) -> List[GradientCheckReport]:
    """Check every loss on ``n_models`` random instances."""
    rng = np.random.default_rng(seed)
    reports = []
    for trial in range(n_models):
        model, fused, q, f = random_instance(rng, widths, size, smooth_sigma, with_center_bias)
        for loss in losses:
            report = check_gradients(model, fused.data, q, f, loss)
            logger.info(f"gradcheck trial {trial} {loss}: max rel err "
                        f"{report.max_relative_error:.3e} ({report.checked} checked, "
                        f"{report.skipped} skipped)")
            reports.append(report)

    worst = max((r.max_relative_error for r in reports), default=0.0)
    if raise_on_failure and worst >= tolerance:
        raise GradientCheckError(f"Max relative gradient error {worst:.3e} >= {tolerance:.0e}",
                                 max_relative_error=worst)
    return reports
