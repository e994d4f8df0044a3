"""Class-balanced weights from per-class training counts."""

from __future__ import annotations

import numpy as np

from .losses import NUM_CLASSES, InvalidInputError

#: Training-split class counts of FEVER 2018 (S, R, N).
FEVER_TRAIN_COUNTS = (80035, 29775, 35639)


def _check_counts(counts) -> np.ndarray:
    n = np.asarray(counts)
    if n.shape != (NUM_CLASSES,) or not np.all(n == np.round(n)) or not np.all(n >= 1):
        raise InvalidInputError(f"class counts must be 3 positive integers, got {counts!r}")
    return n.astype(float)


def class_balanced_weights(counts, beta: float) -> np.ndarray:
    """Per-class weights ``(1 - beta) / (1 - beta**n_i)``.

    ``beta = 0`` gives exactly (1, 1, 1); as ``beta -> 1`` the weights
    approach ``1 / n_i``. Weights are returned unnormalised.
    """
    n = _check_counts(counts)
    beta = float(beta)
    if not 0.0 <= beta < 1.0:
        raise InvalidInputError(f"beta must lie in [0, 1), got {beta}")
    if beta == 0.0:
        return np.ones(NUM_CLASSES)
    # 1 - beta is exact for beta >= 0.5, which keeps log1p accurate near 1
    one_minus_beta = 1.0 - beta
    denom = -np.expm1(n * np.log1p(-one_minus_beta))
    return one_minus_beta / denom


def inverse_frequency_limit(counts) -> np.ndarray:
    """The ``beta -> 1`` limit of :func:`class_balanced_weights`, scaled so the largest weight is 1."""
    n = _check_counts(counts)
    w = 1.0 / n
    return w / w.max()


def training_weights(counts, beta: float) -> np.ndarray:
    """Class-balanced weights rescaled to sum to 3, for use with plain SGD.

    The rescaling is one global constant, so relative class weighting is
    unchanged. ``beta = 0`` still yields exactly (1, 1, 1).
    """
    w = class_balanced_weights(counts, beta)
    return w * (NUM_CLASSES / w.sum())
