"""Energy projection, canonical correlations and the SVCCA score."""

import logging
from typing import Union

import numpy as np
from scipy import linalg

from .data_models import FeatureMatrix
from .decomposition import svd
from ..tensor_core import FeatureMap
from ..error_handling.exceptions import ValidationError, ShapeMismatchError

logger = logging.getLogger(__name__)

RIDGE = 1e-10
MatrixLike = Union[FeatureMatrix, FeatureMap, np.ndarray]


def retained_rank(singular_values: np.ndarray, energy_fraction: float) -> int:
    """Smallest k whose leading squared singular values reach the energy fraction."""
    energy = np.cumsum(np.asarray(singular_values, dtype=np.float64) ** 2)
    if energy.size == 0 or energy[-1] <= 0.0:
        raise ValidationError("Cannot project a zero matrix", field_name="matrix",
                              validation_rule="nonzero")
    return int(np.argmax(energy >= energy_fraction * energy[-1])) + 1


def project_topk(matrix: MatrixLike, energy_fraction: float = 0.99) -> FeatureMatrix:
    """Project onto the leading right-singular directions that hold the energy fraction."""
    if not 0.0 < energy_fraction <= 1.0:
        raise ValidationError(f"energy_fraction must be in (0, 1]: {energy_fraction}",
                              field_name="energy_fraction", field_value=energy_fraction,
                              validation_rule="range_(0,1]")
    m = FeatureMatrix.coerce(matrix)
    decomposition = svd(m)
    k = retained_rank(decomposition.singular_values, energy_fraction)
    return FeatureMatrix(m.data @ decomposition.v[:, :k])


def _inverse_sqrt(cov: np.ndarray) -> np.ndarray:
    eigenvalues, eigenvectors = linalg.eigh(cov)
    eigenvalues = np.maximum(eigenvalues, RIDGE)
    return (eigenvectors / np.sqrt(eigenvalues)) @ eigenvectors.T


def cca_correlations(x: MatrixLike, y: MatrixLike, ridge: float = RIDGE) -> np.ndarray:
    """Canonical correlations between the column spaces of x and y, descending, in [0, 1]."""
    xm = FeatureMatrix.coerce(x).data
    ym = FeatureMatrix.coerce(y).data
    if xm.shape[0] != ym.shape[0]:
        raise ShapeMismatchError(f"CCA needs equal row counts: {xm.shape[0]} vs {ym.shape[0]}",
                                 field_name="rows", expected=(xm.shape[0],), actual=(ym.shape[0],))
    if xm.shape[0] < 2:
        raise ValidationError("CCA needs at least 2 rows", field_name="rows",
                              field_value=xm.shape[0], validation_rule="min_2")

    xc = xm - xm.mean(axis=0)
    yc = ym - ym.mean(axis=0)
    n = xm.shape[0] - 1
    sxx = xc.T @ xc / n + ridge * np.eye(xm.shape[1])
    syy = yc.T @ yc / n + ridge * np.eye(ym.shape[1])
    sxy = xc.T @ yc / n

    whitened = _inverse_sqrt(sxx) @ sxy @ _inverse_sqrt(syy)
    correlations = svd(whitened).singular_values
    return np.clip(correlations, 0.0, 1.0)


def svcca_score(x: MatrixLike, y: MatrixLike, energy_fraction: float = 0.99) -> float:
    """Mean canonical correlation after projecting both inputs onto their top subspaces."""
    correlations = cca_correlations(project_topk(x, energy_fraction),
                                    project_topk(y, energy_fraction))
    return float(np.mean(correlations))


def svcca_similarity(energy_fraction: float = 0.99):
    """Object-similarity callable backed by the SVCCA score."""
    def similarity(f_i: FeatureMap, f_j: FeatureMap) -> float:
        return svcca_score(f_i, f_j, energy_fraction)

    similarity.__name__ = "svcca_similarity"
    return similarity
