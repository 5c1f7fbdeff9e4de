"""Saliency evaluation metrics."""

from .data_models import EvaluationConfig, ImageMetrics, MetricReport, METRIC_NAMES
from .evaluation import (
    roc_auc,
    auc_judd,
    shuffled_auc,
    nss_metric,
    kld_metric,
    cc_metric,
    sim_metric,
    evaluate_image,
    evaluate,
)

__all__ = [
    'EvaluationConfig',
    'ImageMetrics',
    'MetricReport',
    'METRIC_NAMES',
    'roc_auc',
    'auc_judd',
    'shuffled_auc',
    'nss_metric',
    'kld_metric',
    'cc_metric',
    'sim_metric',
    'evaluate_image',
    'evaluate',
]
