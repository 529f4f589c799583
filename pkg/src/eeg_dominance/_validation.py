"""Input checks shared by the functional API and the estimators."""

import numpy as np
from sklearn.utils import check_array

from .core import ConfigurationError, EEGError


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def check_power_of_two(n, name: str = "epoch_len") -> int:
    if isinstance(n, bool) or int(n) != n or not is_power_of_two(int(n)):
        raise ConfigurationError(f"{name} must be a power of two, got {n!r}")
    return int(n)


def check_positive(value, name: str) -> float:
    if not value > 0:
        raise ConfigurationError(f"{name} must be positive, got {value!r}")
    return float(value)


def check_epoch_array(X, n_channels: int = 4) -> np.ndarray:
    """Validate a batch of epochs shaped (n_epochs, n_channels, n_samples)."""
    X = check_array(X, allow_nd=True, ensure_2d=False, dtype=np.float64)
    if X.ndim == 2:
        X = X[np.newaxis]
    if X.ndim != 3 or X.shape[1] != n_channels:
        raise EEGError(
            f"expected epochs shaped (n_epochs, {n_channels}, n_samples), got {X.shape}"
        )
    check_power_of_two(X.shape[2], "n_samples")
    return X
