"""Dense tensor value types shared by every subpackage."""

from dataclasses import dataclass
from typing import Any, Optional, Tuple

import numpy as np

from ..error_handling.exceptions import ValidationError, DetectionError

SUM_TOLERANCE = 1e-9


def _readonly(values: Any, ndim: int, name: str) -> np.ndarray:
    """Copy into a float64 array of the given rank and freeze it."""
    array = np.array(values, dtype=np.float64, copy=True)
    if array.ndim != ndim:
        raise ValidationError(f"{name} must be rank {ndim}, got shape {array.shape}",
                              field_name=name, validation_rule=f"rank_{ndim}")
    if any(n < 1 for n in array.shape):
        raise ValidationError(f"{name} dimensions must be >= 1, got {array.shape}",
                              field_name=name, validation_rule="nonempty")
    if not np.all(np.isfinite(array)):
        raise ValidationError(f"{name} contains non-finite values",
                              field_name=name, validation_rule="finite")
    array.setflags(write=False)
    return array


def as_array(value: Any) -> np.ndarray:
    """Return the float64 array behind a map type, or the value itself as an array."""
    if isinstance(value, (FeatureMap, SaliencyMap, FixationMap)):
        return value.data
    return np.asarray(value, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """Height x width x channels tensor of finite reals."""
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _readonly(self.data, 3, "FeatureMap"))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.data.shape

    def channel(self, index: int) -> np.ndarray:
        return self.data[:, :, index]

    @classmethod
    def from_channels(cls, *planes: np.ndarray) -> "FeatureMap":
        """Stack rank-2 planes into one map, in order."""
        return cls(np.stack([np.asarray(p, dtype=np.float64) for p in planes], axis=-1))


@dataclass(frozen=True)
class Detection:
    """Axis-aligned box in image pixels; max edges are exclusive."""
    x_min: float
    y_min: float
    x_max: float
    y_max: float
    confidence: float = 1.0
    class_id: Optional[int] = None

    def __post_init__(self):
        coords = (self.x_min, self.y_min, self.x_max, self.y_max, self.confidence)
        if not all(np.isfinite(v) for v in coords):
            raise DetectionError(f"Detection has non-finite fields: {self}", detection=self)
        if self.x_min < 0 or self.y_min < 0:
            raise DetectionError(f"Detection starts at negative coordinates: {self}", detection=self)
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise DetectionError(f"Detection is empty: {self}", detection=self)
        if not 0.0 <= self.confidence <= 1.0:
            raise DetectionError(f"Detection confidence outside [0, 1]: {self.confidence}",
                                 detection=self)

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def validate_within(self, img_w: float, img_h: float, index: Optional[int] = None) -> "Detection":
        """Raise DetectionError unless the box lies inside a img_w x img_h frame."""
        if self.x_max > img_w or self.y_max > img_h:
            raise DetectionError(f"Detection {self} exceeds the {img_w}x{img_h} image",
                                 detection=self, index=index)
        return self


@dataclass(frozen=True, eq=False)
class SaliencyMap:
    """Nonnegative rank-2 map; sums to 1 when ``normalized``."""
    data: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        data = _readonly(self.data, 2, "SaliencyMap")
        if float(data.min()) < 0.0:
            raise ValidationError(f"SaliencyMap has negative entries (min {float(data.min())})",
                                  field_name="SaliencyMap", validation_rule="nonnegative")
        if self.normalized and abs(float(data.sum()) - 1.0) > SUM_TOLERANCE:
            raise ValidationError(f"SaliencyMap flagged normalized sums to {float(data.sum())!r}",
                                  field_name="SaliencyMap", validation_rule="sums_to_one")
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape


@dataclass(frozen=True, eq=False)
class FixationMap:
    """Binary rank-2 map of fixated pixels."""
    data: np.ndarray

    def __post_init__(self):
        data = _readonly(self.data, 2, "FixationMap")
        if not np.all((data == 0.0) | (data == 1.0)):
            raise ValidationError("FixationMap must be binary",
                                  field_name="FixationMap", validation_rule="binary")
        object.__setattr__(self, "data", data)

    @classmethod
    def from_points(cls, height: int, width: int, points) -> "FixationMap":
        """Build a map from (row, col) pairs; repeated points collapse."""
        data = np.zeros((height, width))
        for row, col in points:
            data[int(row), int(col)] = 1.0
        return cls(data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape

    @property
    def count(self) -> int:
        return int(self.data.sum())

    @property
    def coordinates(self) -> np.ndarray:
        """(count, 2) array of (row, col) fixation positions in row-major order."""
        return np.argwhere(self.data > 0)
