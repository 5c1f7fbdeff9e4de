"""One-sided Jacobi singular value decomposition."""

import logging
import math
from typing import Union

import numpy as np

from .data_models import FeatureMatrix, SVDResult
from ..error_handling.exceptions import ConvergenceError

logger = logging.getLogger(__name__)

MAX_SWEEPS = 100
ROTATION_TOLERANCE = 1e-12


def _complete_basis(u: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Replace the columns of ``u`` not in ``keep`` with an orthonormal completion."""
    m = u.shape[0]
    basis = [u[:, k] for k in range(u.shape[1]) if keep[k]]
    candidates = iter(np.eye(m))
    for k in range(u.shape[1]):
        if keep[k]:
            continue
        for e in candidates:
            vec = e.copy()
            for b in basis:
                vec -= np.dot(b, vec) * b
            norm = np.linalg.norm(vec)
            if norm > 0.5:
                u[:, k] = vec / norm
                basis.append(u[:, k])
                break
    return u


def _jacobi_tall(a: np.ndarray, max_sweeps: int, tolerance: float):
    """Orthogonalize the columns of a (m >= n) by plane rotations."""
    u = a.copy()
    n = u.shape[1]
    v = np.eye(n)

    for sweep in range(1, max_sweeps + 1):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = float(np.dot(u[:, p], u[:, p]))
                beta = float(np.dot(u[:, q], u[:, q]))
                gamma = float(np.dot(u[:, p], u[:, q]))
                if abs(gamma) <= tolerance * math.sqrt(alpha * beta) or gamma == 0.0:
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t

                up = u[:, p].copy()
                u[:, p] = c * up - s * u[:, q]
                u[:, q] = s * up + c * u[:, q]
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
        if not rotated:
            return u, v, sweep

    raise ConvergenceError(f"Jacobi SVD did not converge in {max_sweeps} sweeps",
                           iterations=max_sweeps)


def svd(matrix: Union[FeatureMatrix, np.ndarray], max_sweeps: int = MAX_SWEEPS,
        tolerance: float = ROTATION_TOLERANCE) -> SVDResult:
    """Thin SVD ``M = U diag(s) V^T`` with s descending.

    Wide matrices are handled through their transpose.
    """
    a = FeatureMatrix.coerce(matrix).data
    transposed = a.shape[0] < a.shape[1]
    if transposed:
        a = a.T

    u, v, sweeps = _jacobi_tall(np.array(a, copy=True), max_sweeps, tolerance)
    sigma = np.linalg.norm(u, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma, u, v = sigma[order], u[:, order], v[:, order]

    scale = sigma[0] if sigma.size and sigma[0] > 0 else 1.0
    keep = sigma > 1e-14 * scale
    u = np.divide(u, sigma, out=np.zeros_like(u), where=keep)
    if not np.all(keep):
        u = _complete_basis(u, keep)
        sigma = np.where(keep, sigma, 0.0)
    logger.debug(f"Jacobi SVD of {a.shape} converged after {sweeps} sweep(s)")

    if transposed:
        return SVDResult(u=v, singular_values=sigma, v=u, sweeps=sweeps)
    return SVDResult(u=u, singular_values=sigma, v=v, sweeps=sweeps)
