"""Data models for saliency evaluation."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional

METRIC_NAMES = ("aucj", "sauc", "nss", "kld", "cc", "sim")


@dataclass
class EvaluationConfig:
    """Evaluation settings."""
    kld_eps: float = 1e-7
    sauc_splits: int = 10
    sauc_seed: int = 0


@dataclass
class ImageMetrics:
    """Metric values of one image; metrics whose preconditions failed are in ``skipped``."""
    image_id: str
    values: Dict[str, float] = field(default_factory=dict)
    skipped: Dict[str, str] = field(default_factory=dict)


@dataclass
class MetricReport:
    """Per-image metrics and their means over the images that were not skipped."""
    per_image: List[ImageMetrics] = field(default_factory=list)
    label: str = ""

    def values(self, metric: str) -> List[float]:
        return [image.values[metric] for image in self.per_image if metric in image.values]

    def mean(self, metric: str) -> Optional[float]:
        """Arithmetic mean in image order, or None when every image skipped the metric."""
        values = self.values(metric)
        if not values:
            return None
        total = 0.0
        for value in values:
            total += value
        return total / len(values)

    def skip_count(self, metric: str) -> int:
        return sum(1 for image in self.per_image if metric in image.skipped)

    @property
    def means(self) -> Dict[str, Optional[float]]:
        return {metric: self.mean(metric) for metric in METRIC_NAMES}

    @property
    def aucj(self) -> Optional[float]:
        return self.mean("aucj")

    @property
    def sauc(self) -> Optional[float]:
        return self.mean("sauc")

    @property
    def nss(self) -> Optional[float]:
        return self.mean("nss")

    @property
    def kld(self) -> Optional[float]:
        return self.mean("kld")

    @property
    def cc(self) -> Optional[float]:
        return self.mean("cc")

    @property
    def sim(self) -> Optional[float]:
        return self.mean("sim")
