"""
Central finite-difference gradient verification.
"""

import logging
from typing import Callable

import numpy as np

from .layers import as_tensor

logger = logging.getLogger(__name__)

# loss_fn(params) -> (scalar loss, analytic gradient with the shape of params)
LossFn = Callable[[np.ndarray], tuple[float, np.ndarray]]


def gradient_check(loss_fn: LossFn, params: np.ndarray, eps: float = 1e-5) -> float:
    """
    Compare an analytic gradient against central differences.

    `loss_fn` is evaluated on a working copy of `params` that is perturbed in
    place one coordinate at a time, so closures that alias it into a layer
    see every perturbation. The copy is restored after each coordinate.

    Returns:
        max over coordinates of |analytic - numeric| / max(1, |analytic| + |numeric|)
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")

    working = as_tensor(params).copy()
    loss, analytic = loss_fn(working)
    if not np.isfinite(loss):
        raise ValueError(f"Loss function returned non-finite value {loss}")
    analytic = as_tensor(analytic).copy()
    if analytic.shape != working.shape:
        raise ValueError(f"Analytic gradient shape {analytic.shape} != params {working.shape}")

    numeric = np.zeros_like(working)
    for idx in np.ndindex(working.shape):
        original = working[idx]
        working[idx] = original + eps
        loss_plus, _ = loss_fn(working)
        working[idx] = original - eps
        loss_minus, _ = loss_fn(working)
        working[idx] = original
        if not (np.isfinite(loss_plus) and np.isfinite(loss_minus)):
            raise ValueError(f"Loss function returned non-finite value at coordinate {idx}")
        numeric[idx] = (loss_plus - loss_minus) / (2.0 * eps)

    errors = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic) + np.abs(numeric))
    worst = float(errors.max()) if errors.size else 0.0
    logger.debug(f"Gradient check over {working.size} coordinates: max relative error {worst:.3e}")
    return worst
