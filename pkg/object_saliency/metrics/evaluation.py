"""The six saliency metrics and batch evaluation."""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from .data_models import EvaluationConfig, ImageMetrics, MetricReport, METRIC_NAMES
from ..readout.losses import kld_loss
from ..tensor_core import SaliencyMap, FixationMap, as_array
from ..error_handling.exceptions import (
    DegenerateMapError, ValidationError, ShapeMismatchError
)
from ..error_handling.validators import InputValidator
from ..performance.monitor import monitor_performance

logger = logging.getLogger(__name__)

MapLike = Union[SaliencyMap, np.ndarray]
FixLike = Union[FixationMap, np.ndarray]
NORMALIZATION_TOLERANCE = 1e-6


def roc_auc(positives: np.ndarray, negatives: np.ndarray) -> float:
    """Area under the ROC curve swept over every distinct score (>= convention), trapezoidal."""
    pos = np.sort(np.asarray(positives, dtype=np.float64).ravel())
    neg = np.sort(np.asarray(negatives, dtype=np.float64).ravel())
    if pos.size == 0 or neg.size == 0:
        raise DegenerateMapError("ROC needs at least one positive and one negative",
                                 map_name="fixations")

    thresholds = np.unique(np.concatenate([pos, neg]))[::-1]
    tp = pos.size - np.searchsorted(pos, thresholds, side="left")
    fp = neg.size - np.searchsorted(neg, thresholds, side="left")
    tpr = np.concatenate([[0.0], tp / pos.size])
    fpr = np.concatenate([[0.0], fp / neg.size])
    return float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2.0))


def _checked(p: MapLike, f: FixLike, name: str):
    pa = as_array(p)
    fa = as_array(f)
    InputValidator.validate_same_shape(name, pa.shape, fa.shape)
    if not np.any(fa > 0):
        raise DegenerateMapError("Fixation map has no fixations", map_name="fixations")
    return pa, fa


def auc_judd(p: MapLike, f: FixLike) -> float:
    """ROC area with fixated pixels as positives and every other pixel as a negative."""
    pa, fa = _checked(p, f, "auc_judd")
    fixated = fa > 0
    return roc_auc(pa[fixated], pa[~fixated])


def shuffled_auc(p: MapLike, f: FixLike, other_fixations: Sequence[FixLike],
                 n_splits: int = 10, seed: int = 0) -> float:
    """ROC area with negatives drawn from other images' fixation locations.

    The pool is every distinct location fixated in ``other_fixations`` minus
    the pixels fixated in ``f``. Each split draws min(#fixations, #pool)
    negatives without replacement; the result is the mean over splits.
    """
    pa, fa = _checked(p, f, "shuffled_auc")
    n_splits = InputValidator.validate_count("n_splits", n_splits)
    fixated = fa > 0

    pools = []
    for index, other in enumerate(other_fixations):
        oa = as_array(other)
        InputValidator.validate_same_shape(f"other fixations {index}", pa.shape, oa.shape)
        pools.append(np.argwhere(oa > 0))
    pool = np.concatenate(pools, axis=0) if pools else np.zeros((0, 2), dtype=np.intp)
    if pool.size:
        pool = np.unique(pool, axis=0)
        pool = pool[~fixated[pool[:, 0], pool[:, 1]]]
    if pool.shape[0] == 0:
        raise DegenerateMapError("No negatives left in the shuffled-AUC pool",
                                 map_name="other_fixations")

    positives = pa[fixated]
    draw = min(positives.size, pool.shape[0])
    rng = np.random.default_rng(seed)
    total = 0.0
    for _ in range(n_splits):
        chosen = pool[rng.choice(pool.shape[0], size=draw, replace=False)]
        total += roc_auc(positives, pa[chosen[:, 0], chosen[:, 1]])
    return total / n_splits


def nss_metric(p: MapLike, f: FixLike) -> float:
    """Mean standardized saliency at the fixations."""
    pa, fa = _checked(p, f, "nss")
    sigma = float(pa.std())
    if sigma <= 0.0:
        raise DegenerateMapError("Prediction is constant; NSS is undefined", map_name="prediction")
    standardized = (pa - pa.mean()) / sigma
    return float(standardized[fa > 0].mean())


def kld_metric(p: MapLike, q: MapLike, eps: float = 1e-7) -> float:
    """Divergence of the prediction from the ground truth; same formula as the training loss."""
    return kld_loss(p, q, eps)


def cc_metric(p: MapLike, q: MapLike) -> float:
    """Pearson correlation of the two maps."""
    pa, qa = as_array(p), as_array(q)
    InputValidator.validate_same_shape("cc", pa.shape, qa.shape)
    pc = pa - pa.mean()
    qc = qa - qa.mean()
    sp = float(np.sum(pc * pc))
    sq = float(np.sum(qc * qc))
    if sp <= 0.0 or sq <= 0.0:
        name = "prediction" if sp <= 0.0 else "ground truth"
        raise DegenerateMapError(f"{name} is constant; CC is undefined", map_name=name)
    return float(np.clip(np.sum(pc * qc) / np.sqrt(sp * sq), -1.0, 1.0))


def _distribution(values: MapLike, name: str) -> np.ndarray:
    data = as_array(values)
    if float(data.min()) < 0.0 or abs(float(data.sum()) - 1.0) > NORMALIZATION_TOLERANCE:
        raise ValidationError(f"{name} must be a normalized distribution (sum {float(data.sum())!r})",
                              field_name=name, validation_rule="normalized")
    return data


def sim_metric(p: MapLike, q: MapLike) -> float:
    """Histogram intersection of two distributions."""
    pa = _distribution(p, "prediction")
    qa = _distribution(q, "ground truth")
    InputValidator.validate_same_shape("sim", pa.shape, qa.shape)
    return float(np.sum(np.minimum(pa, qa)))


def evaluate_image(image_id: str, prediction: MapLike, ground_truth: MapLike,
                   fixations: FixLike, other_fixations: Sequence[FixLike],
                   config: EvaluationConfig) -> ImageMetrics:
    """All six metrics for one image; failed preconditions are recorded as skips."""
    shape = as_array(prediction).shape
    for name, other in (("ground truth", ground_truth), ("fixations", fixations)):
        other_shape = as_array(other).shape
        if other_shape != shape:
            raise ShapeMismatchError(
                f"Scene {image_id}: {name} {other_shape} does not match prediction {shape}",
                field_name=image_id, expected=shape, actual=other_shape)

    calls = {
        "aucj": lambda: auc_judd(prediction, fixations),
        "sauc": lambda: shuffled_auc(prediction, fixations, other_fixations,
                                     config.sauc_splits, config.sauc_seed),
        "nss": lambda: nss_metric(prediction, fixations),
        "kld": lambda: kld_metric(prediction, ground_truth, config.kld_eps),
        "cc": lambda: cc_metric(prediction, ground_truth),
        "sim": lambda: sim_metric(prediction, ground_truth),
    }
    result = ImageMetrics(image_id)
    for metric in METRIC_NAMES:
        try:
            result.values[metric] = calls[metric]()
        except ShapeMismatchError as e:
            raise ShapeMismatchError(f"Scene {image_id}: {e.message}", field_name=image_id,
                                     expected=e.expected, actual=e.actual)
        except (DegenerateMapError, ValidationError) as e:
            result.skipped[metric] = e.message
            logger.warning(f"Scene {image_id}: skipping {metric}: {e.message}")
    return result


@monitor_performance("evaluate")
def evaluate(predictions: Sequence[MapLike], ground_truths: Sequence[MapLike],
             fixations: Sequence[FixLike], other_fixations: Optional[Sequence[FixLike]] = None,
             config: Optional[EvaluationConfig] = None,
             image_ids: Optional[Sequence[str]] = None,
             max_workers: int = 1, label: str = "") -> MetricReport:
    """Per-image metrics and their means.

    Without an explicit ``other_fixations`` pool, each image's shuffled-AUC
    negatives come from the fixations of the other images in the batch.
    """
    config = config or EvaluationConfig()
    n = len(predictions)
    if len(ground_truths) != n or len(fixations) != n:
        raise ValidationError(f"Misaligned inputs: {n} predictions, {len(ground_truths)} ground "
                              f"truths, {len(fixations)} fixation maps",
                              field_name="inputs", validation_rule="same_length")
    ids = list(image_ids) if image_ids is not None else [str(i) for i in range(n)]
    if len(ids) != n:
        raise ValidationError("image_ids must align with predictions",
                              field_name="image_ids", validation_rule="same_length")

    def pool_for(index: int) -> List[FixLike]:
        if other_fixations is not None:
            return list(other_fixations)
        return [fix for j, fix in enumerate(fixations) if j != index]

    def run(index: int) -> ImageMetrics:
        return evaluate_image(ids[index], predictions[index], ground_truths[index],
                              fixations[index], pool_for(index), config)

    if max_workers <= 1 or n <= 1:
        per_image = [run(i) for i in range(n)]
    else:
        results: Dict[int, ImageMetrics] = {}
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            future_to_index = {executor.submit(run, i): i for i in range(n)}
            for future in as_completed(future_to_index):
                results[future_to_index[future]] = future.result()
        per_image = [results[i] for i in range(n)]

    report = MetricReport(per_image=per_image, label=label)
    for metric in METRIC_NAMES:
        if report.skip_count(metric):
            logger.warning(f"{metric}: {report.skip_count(metric)} of {n} image(s) skipped")
    return report
