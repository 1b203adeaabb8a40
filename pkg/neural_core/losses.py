from __future__ import annotations

import numpy as np

from .layers import NetworkError


def _check(z: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    z = np.asarray(z, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if z.shape != target.shape:
        raise NetworkError(f"prediction shape {z.shape} does not match target shape {target.shape}")
    if z.size == 0:
        raise NetworkError("mse of an empty batch")
    return z, target


def mse_loss(z: np.ndarray, target: np.ndarray) -> float:
    z, target = _check(z, target)
    return float(np.mean((z - target) ** 2))


def mse_grad(z: np.ndarray, target: np.ndarray) -> np.ndarray:
    z, target = _check(z, target)
    return 2.0 / z.size * (z - target)
