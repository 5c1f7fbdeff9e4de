"""Data models for SVD/CCA feature comparison."""

from dataclasses import dataclass
from typing import Union

import numpy as np

from ..tensor_core import FeatureMap
from ..error_handling.exceptions import ValidationError


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Positions x channels matrix; one row per spatial location."""
    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64, copy=True)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValidationError(f"FeatureMatrix must be a non-empty matrix, got shape {data.shape}",
                                  field_name="FeatureMatrix", validation_rule="rank_2")
        if not np.all(np.isfinite(data)):
            raise ValidationError("FeatureMatrix contains non-finite values",
                                  field_name="FeatureMatrix", validation_rule="finite")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @classmethod
    def from_feature_map(cls, fmap: FeatureMap) -> "FeatureMatrix":
        """Flatten h x w x d features to (h*w) x d, row-major over positions."""
        return cls(fmap.data.reshape(fmap.height * fmap.width, fmap.channels))

    @classmethod
    def coerce(cls, value: Union["FeatureMatrix", FeatureMap, np.ndarray]) -> "FeatureMatrix":
        if isinstance(value, FeatureMatrix):
            return value
        if isinstance(value, FeatureMap):
            return cls.from_feature_map(value)
        return cls(value)


@dataclass(frozen=True, eq=False)
class SVDResult:
    """Thin SVD with singular values in descending order."""
    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray
    sweeps: int = 0

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.singular_values) @ self.v.T
