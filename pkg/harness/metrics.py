from __future__ import annotations

import math
from typing import Sequence, Union

import numpy as np

from geometry import DoA

Angles = Union[np.ndarray, Sequence[DoA]]


class MetricError(ValueError):
    pass


def _as_array(values: Angles) -> np.ndarray:
    if isinstance(values, np.ndarray):
        array = np.asarray(values, dtype=np.float64)
    else:
        array = np.array([[doa.theta, doa.phi] for doa in values], dtype=np.float64).reshape(-1, 2)
    if array.ndim != 2 or array.shape[1] != 2:
        raise MetricError(f"angles must have shape (C, 2), got {array.shape}")
    return array


def _pair(estimates: Angles, truths: Angles) -> tuple[np.ndarray, np.ndarray]:
    est = _as_array(estimates)
    true = _as_array(truths)
    if est.shape != true.shape:
        raise MetricError(f"{est.shape[0]} estimates for {true.shape[0]} truths")
    if est.shape[0] == 0:
        raise MetricError("RMSE of an empty trial set")
    return est, true


def rmse(estimates: Angles, truths: Angles) -> float:
    """sqrt(sum((theta_err^2 + phi_err^2)) / (2C)) in degrees; no angular wrapping."""
    est, true = _pair(estimates, truths)
    err = est - true
    return math.sqrt(float(np.sum(err**2)) / (2 * est.shape[0]))


def mean_abs_error(estimates: Angles, truths: Angles) -> tuple[float, float]:
    est, true = _pair(estimates, truths)
    mae = np.mean(np.abs(est - true), axis=0)
    return float(mae[0]), float(mae[1])
