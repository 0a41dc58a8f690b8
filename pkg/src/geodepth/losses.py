"""Pseudo-Huber regression loss and the two-task weighted objective."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, EmptySelectionError

DEFAULT_DELTA = 2.0
DEFAULT_ALPHA_H = 0.1
# alpha_h is divided by ALPHA_H_DECAY_FACTOR once, after ALPHA_H_DECAY_EPOCH epochs
ALPHA_H_DECAY_EPOCH = 5
ALPHA_H_DECAY_FACTOR = 10.0


@dataclass(frozen=True)
class LossConfig:
    delta: float = DEFAULT_DELTA
    alpha_h: float = DEFAULT_ALPHA_H

    def __post_init__(self):
        if not self.delta > 0:
            raise ContractError("delta must be positive")
        if not self.alpha_h >= 0:
            raise ContractError("alpha_h must be non-negative")


def pseudo_huber(y, y_hat, delta: float = DEFAULT_DELTA):
    """``delta**2 * (sqrt(1 + ((y - y_hat) / delta)**2) - 1)``, elementwise.

    Evaluated as ``delta**2 * x / (sqrt(1 + x) + 1)`` with ``x = (r/delta)**2``,
    which is the same quantity without cancellation for small residuals.
    """
    if not delta > 0:
        raise ContractError("delta must be positive")
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(y_hat))):
        raise ContractError("pseudo_huber inputs must be finite")
    x = ((y - y_hat) / delta) ** 2
    out = delta * delta * x / (np.sqrt(1.0 + x) + 1.0)
    return float(out) if out.ndim == 0 else out


def pseudo_huber_grad(y, y_hat, delta: float = DEFAULT_DELTA):
    """Derivative with respect to ``y``: ``r / sqrt(1 + (r/delta)**2)``."""
    r = np.asarray(y, dtype=np.float64) - np.asarray(y_hat, dtype=np.float64)
    out = r / np.sqrt(1.0 + (r / delta) ** 2)
    return float(out) if out.ndim == 0 else out


def masked_mean_loss(y, y_hat, mask, delta: float = DEFAULT_DELTA) -> float:
    y = np.asarray(getattr(y, "values", y), dtype=np.float64)
    y_hat = np.asarray(getattr(y_hat, "values", y_hat), dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if not (y.shape == y_hat.shape == mask.shape):
        raise ContractError("y, y_hat and mask must share a shape")
    if not mask.any():
        raise EmptySelectionError("mask selects no pixels")
    return float(np.mean(pseudo_huber(y[mask], y_hat[mask], delta)))


def combined_loss(height_loss: float, depth_loss: float, alpha_h: float = DEFAULT_ALPHA_H) -> float:
    if height_loss < 0 or depth_loss < 0:
        raise ContractError("loss terms must be non-negative")
    return alpha_h * height_loss + depth_loss
