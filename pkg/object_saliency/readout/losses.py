"""Training losses on predicted distributions, with gradients w.r.t. the prediction."""

from typing import Tuple, Union

import numpy as np

from ..tensor_core import SaliencyMap, FixationMap, as_array
from ..error_handling.exceptions import DegenerateMapError, ValidationError
from ..error_handling.validators import InputValidator

MapLike = Union[SaliencyMap, FixationMap, np.ndarray]
DEFAULT_KLD_EPS = 1e-7


def _pair(p: MapLike, q: MapLike, name: str) -> Tuple[np.ndarray, np.ndarray]:
    pa, qa = as_array(p), as_array(q)
    InputValidator.validate_same_shape(name, pa.shape, qa.shape)
    return pa, qa


def _centered(values: np.ndarray, name: str) -> Tuple[np.ndarray, float]:
    """Mean-removed values and their sum of squares; constant maps are rejected."""
    centered = values - values.mean()
    ss = float(np.sum(centered * centered))
    if ss <= 0.0:
        raise DegenerateMapError(f"{name} is constant; its standard deviation is 0", map_name=name)
    return centered, ss


def kld_with_grad(p: np.ndarray, q: np.ndarray, eps: float) -> Tuple[float, np.ndarray]:
    ratio = q / (eps + p)
    inner = eps + ratio
    value = float(np.sum(q * np.log(inner)))
    grad = -q * ratio / ((eps + p) * inner)
    return value, grad


def cc_prime_with_grad(p: np.ndarray, q: np.ndarray) -> Tuple[float, np.ndarray]:
    pc, sp = _centered(p, "prediction")
    qc, sq = _centered(q, "ground truth")
    root = np.sqrt(sp * sq)
    r = float(np.sum(pc * qc)) / root
    grad = -(qc / root - r * pc / sp)
    return 1.0 - r, grad


def nss_prime_with_grad(p: np.ndarray, f: np.ndarray) -> Tuple[float, np.ndarray]:
    n_fix = float(f.sum())
    if n_fix <= 0:
        raise DegenerateMapError("Fixation map has no fixations", map_name="fixations")
    n = p.size
    pc, sp = _centered(p, "prediction")
    fc, sf = _centered(f, "fixations")
    sigma_p = np.sqrt(sp / n)
    p_std = pc / sigma_p
    f_std = fc / np.sqrt(sf / n)
    value = float(np.sum((f_std - p_std) * f)) / n_fix

    weighted = float(np.sum(f * pc))
    grad = -((f - n_fix / n) / sigma_p - weighted * pc / (n * sigma_p ** 3)) / n_fix
    return value, grad


def kld_loss(p: MapLike, q: MapLike, eps: float = DEFAULT_KLD_EPS) -> float:
    """Sum of Q * log(eps + Q / (eps + P)); P is the prediction, Q the ground truth."""
    if not eps > 0:
        raise ValidationError(f"eps must be > 0: {eps}", field_name="eps", validation_rule="positive")
    pa, qa = _pair(p, q, "kld")
    return kld_with_grad(pa, qa, eps)[0]


def cc_prime(p: MapLike, q: MapLike) -> float:
    """One minus the Pearson correlation; lies in [0, 2]."""
    pa, qa = _pair(p, q, "cc_prime")
    return cc_prime_with_grad(pa, qa)[0]


def nss_prime(p: MapLike, f: MapLike) -> float:
    """Mean gap between the standardized fixation map and standardized prediction at fixations."""
    pa, fa = _pair(p, f, "nss_prime")
    return nss_prime_with_grad(pa, fa)[0]


def eml_loss(p: MapLike, q: MapLike, f: MapLike, eps: float = DEFAULT_KLD_EPS) -> float:
    """NSS' + CC' + KLD."""
    return nss_prime(p, f) + cc_prime(p, q) + kld_loss(p, q, eps)


def loss_with_grad(kind: str, p: np.ndarray, q: np.ndarray, f: np.ndarray,
                   eps: float = DEFAULT_KLD_EPS) -> Tuple[float, np.ndarray]:
    """Loss value and dLoss/dP for ``kind`` in {kld, eml}."""
    value, grad = kld_with_grad(p, q, eps)
    if kind == "kld":
        return value, grad
    if kind == "eml":
        cc_value, cc_grad = cc_prime_with_grad(p, q)
        nss_value, nss_grad = nss_prime_with_grad(p, f)
        return nss_value + cc_value + value, nss_grad + cc_grad + grad
    raise ValidationError(f"Unknown loss {kind!r}", field_name="loss", field_value=kind,
                          validation_rule="kld|eml")
