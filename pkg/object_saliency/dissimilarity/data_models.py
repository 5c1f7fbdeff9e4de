"""Data models for object dissimilarity channels."""

from dataclasses import dataclass, field
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..tensor_core import FeatureMap, Detection, bilinear_resize, slice_features
from ..error_handling.exceptions import ValidationError, ShapeMismatchError

APPEARANCE = "appearance"
SIZE = "size"
DISTANCES = ("cosine", "svcca")


@dataclass
class DissimilarityConfig:
    """Settings for the appearance-dissimilarity pipeline."""
    eps: float = 1e-8
    distance: str = "cosine"
    energy_fraction: float = 0.99
    tie_tolerance: float = 1e-9


@dataclass(frozen=True, eq=False)
class ChannelMap:
    """Single-channel map on the global feature grid, zero outside every box."""
    data: np.ndarray
    kind: str

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64, copy=True)
        if data.ndim != 2:
            raise ValidationError(f"ChannelMap must be rank 2, got shape {data.shape}",
                                  field_name=self.kind, validation_rule="rank_2")
        if data.size and (float(data.min()) < 0.0 or float(data.max()) > 1.0):
            raise ValidationError(f"{self.kind} channel values must lie in [0, 1]",
                                  field_name=self.kind, validation_rule="unit_interval")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape

    @classmethod
    def zeros(cls, height: int, width: int, kind: str) -> "ChannelMap":
        return cls(np.zeros((height, width)), kind)


@dataclass(frozen=True, eq=False)
class ObjectSet:
    """Detections paired with their feature slices, all resized to one common size.

    ``raw_slices`` keeps the slices before resizing; the object-feature block
    is painted from them.
    """
    objects: Tuple[Tuple[Detection, FeatureMap], ...] = ()
    raw_slices: Tuple[FeatureMap, ...] = ()

    def __post_init__(self):
        objects = tuple((det, fmap) for det, fmap in self.objects)
        object.__setattr__(self, "objects", objects)
        object.__setattr__(self, "raw_slices", tuple(self.raw_slices))
        if objects:
            first = objects[0][1].shape
            for index, (_, fmap) in enumerate(objects):
                if fmap.shape != first:
                    raise ShapeMismatchError(f"Object {index} features {fmap.shape} differ from {first}",
                                             field_name="objects", expected=first, actual=fmap.shape)
        if self.raw_slices and len(self.raw_slices) != len(objects):
            raise ValidationError("raw_slices must align with objects",
                                  field_name="raw_slices", validation_rule="aligned")

    def __len__(self) -> int:
        return len(self.objects)

    @property
    def detections(self) -> List[Detection]:
        return [det for det, _ in self.objects]

    @property
    def features(self) -> List[FeatureMap]:
        return [fmap for _, fmap in self.objects]

    @classmethod
    def from_detections(cls, features: FeatureMap, detections: Sequence[Detection],
                        frame_w: float, frame_h: float) -> "ObjectSet":
        """Slice every detection out of ``features`` and resize to the largest slice."""
        raw = [slice_features(features, det, frame_w, frame_h, index=i)
               for i, det in enumerate(detections)]
        if not raw:
            return cls()
        out_h = max(s.height for s in raw)
        out_w = max(s.width for s in raw)
        resized = [bilinear_resize(s, out_h, out_w) for s in raw]
        return cls(tuple(zip(detections, resized)), tuple(raw))


@dataclass(frozen=True)
class AblationFlags:
    """Which optional blocks join the global features: O, S and A."""
    objects: bool = False
    size: bool = False
    appearance: bool = False

    @property
    def label(self) -> str:
        parts = [name for name, on in (("O", self.objects), ("S", self.size),
                                       ("A", self.appearance)) if on]
        return "+".join(parts) if parts else "none"

    @property
    def is_empty(self) -> bool:
        return not (self.objects or self.size or self.appearance)

    @classmethod
    def from_label(cls, label: str) -> "AblationFlags":
        """Parse labels such as ``S+A``, ``O`` or ``none``."""
        text = label.strip().upper()
        if text in ("", "NONE", "BASELINE"):
            return cls()
        parts = set(p.strip() for p in text.split("+"))
        unknown = parts - {"O", "S", "A"}
        if unknown:
            raise ValidationError(f"Unknown ablation flag(s) {sorted(unknown)} in {label!r}",
                                  field_name="flags", field_value=label, validation_rule="O|S|A")
        return cls(objects="O" in parts, size="S" in parts, appearance="A" in parts)

    @classmethod
    def all_subsets(cls) -> List["AblationFlags"]:
        """The eight subsets of {O, S, A}, smallest first."""
        names = ("objects", "size", "appearance")
        subsets = []
        for r in range(len(names) + 1):
            for combo in combinations(names, r):
                subsets.append(cls(**{name: True for name in combo}))
        return subsets


@dataclass(frozen=True, eq=False)
class SceneChannels:
    """Everything the extractor derives for one scene."""
    appearance: ChannelMap
    size: ChannelMap
    object_block: FeatureMap
    scores: List[float] = field(default_factory=list)
    object_set: Optional[ObjectSet] = None
