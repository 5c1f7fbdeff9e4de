"""Per-scene pipeline from detections to appearance, size and object-feature channels."""

import logging
from typing import Optional, Sequence

from .data_models import DissimilarityConfig, ObjectSet, SceneChannels, DISTANCES
from .scoring import dissimilarity_scores, Similarity
from .channels import rasterize_scores, size_channel, object_block
from ..svcca import svcca_similarity
from ..tensor_core import FeatureMap, Detection
from ..error_handling.exceptions import ConfigurationError

logger = logging.getLogger(__name__)


class DissimilarityExtractor:
    """Builds the dissimilarity channels of one scene.

    Detections are in image pixels. Object features are sliced from
    ``object_features`` when given (e.g. a detector's own feature map whose
    frame is detector_w x detector_h), otherwise from the global map using
    the image frame.
    """

    def __init__(self, config: Optional[DissimilarityConfig] = None):
        self.config = config or DissimilarityConfig()
        self.similarity = self._build_similarity(self.config)

    @staticmethod
    def _build_similarity(config: DissimilarityConfig) -> Optional[Similarity]:
        if config.distance not in DISTANCES:
            raise ConfigurationError(f"Unknown distance backend: {config.distance}",
                                     config_key="dissimilarity.distance",
                                     config_value=config.distance)
        if config.distance == "svcca":
            return svcca_similarity(config.energy_fraction)
        return None

    def object_set(self, global_map: FeatureMap, detections: Sequence[Detection],
                   img_w: float, img_h: float, object_features: Optional[FeatureMap] = None,
                   detector_w: Optional[float] = None,
                   detector_h: Optional[float] = None) -> ObjectSet:
        source = object_features if object_features is not None else global_map
        frame_w = detector_w if detector_w is not None else img_w
        frame_h = detector_h if detector_h is not None else img_h
        scaled = detections
        if frame_w != img_w or frame_h != img_h:
            scaled = [Detection(d.x_min * frame_w / img_w, d.y_min * frame_h / img_h,
                                d.x_max * frame_w / img_w, d.y_max * frame_h / img_h,
                                d.confidence, d.class_id) for d in detections]
        object_set = ObjectSet.from_detections(source, scaled, frame_w, frame_h)
        if scaled is not detections:
            object_set = ObjectSet(tuple(zip(detections, object_set.features)),
                                   object_set.raw_slices)
        return object_set

    def extract(self, global_map: FeatureMap, detections: Sequence[Detection],
                img_w: float, img_h: float, object_features: Optional[FeatureMap] = None,
                detector_w: Optional[float] = None,
                detector_h: Optional[float] = None) -> SceneChannels:
        """Compute the appearance and size channels plus the object-feature block."""
        detections = list(detections)
        for index, det in enumerate(detections):
            det.validate_within(img_w, img_h, index=index)

        objects = self.object_set(global_map, detections, img_w, img_h,
                                  object_features, detector_w, detector_h)
        scores = dissimilarity_scores(objects, self.config.eps, self.similarity,
                                      self.config.tie_tolerance)

        out_h, out_w = global_map.height, global_map.width
        appearance = rasterize_scores(detections, scores, out_h, out_w, img_w, img_h)
        size = size_channel(detections, out_h, out_w, img_w, img_h)
        depth = (object_features if object_features is not None else global_map).channels
        block = object_block(objects, out_h, out_w, img_w, img_h, channels=depth)

        logger.debug(f"Extracted channels for {len(detections)} detection(s) "
                     f"with the {self.config.distance} backend")
        return SceneChannels(appearance=appearance, size=size, object_block=block,
                             scores=scores, object_set=objects)
