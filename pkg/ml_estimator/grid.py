from __future__ import annotations

import math

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from geometry import DoA


class SearchGrid(BaseModel):
    """Inclusive (theta, phi) search grid in degrees; defaults give 181 x 361 points."""

    theta_min: float = 0.0
    theta_max: float = 90.0
    phi_min: float = 0.0
    phi_max: float = 180.0
    step: float = 0.5

    model_config = ConfigDict(extra="forbid", frozen=True)

    @model_validator(mode="after")
    def _validate_grid(self) -> "SearchGrid":
        if not self.step > 0:
            raise ValueError("grid.step must be > 0")
        if self.theta_min > self.theta_max:
            raise ValueError("grid.theta_min must be <= grid.theta_max")
        if self.phi_min > self.phi_max:
            raise ValueError("grid.phi_min must be <= grid.phi_max")
        if self.theta_min < 0 or self.theta_max > 90:
            raise ValueError("grid.theta range must lie within [0, 90]")
        if self.phi_min < 0 or self.phi_max > 180:
            raise ValueError("grid.phi range must lie within [0, 180]")
        return self

    @property
    def g_theta(self) -> int:
        return _count(self.theta_min, self.theta_max, self.step)

    @property
    def g_phi(self) -> int:
        return _count(self.phi_min, self.phi_max, self.step)

    @property
    def size(self) -> int:
        return self.g_theta * self.g_phi

    def thetas(self) -> np.ndarray:
        return self.theta_min + self.step * np.arange(self.g_theta, dtype=np.float64)

    def phis(self) -> np.ndarray:
        return self.phi_min + self.step * np.arange(self.g_phi, dtype=np.float64)

    def point(self, i_theta: int, i_phi: int) -> DoA:
        return DoA(float(self.thetas()[i_theta]), float(self.phis()[i_phi]))


def _count(lo: float, hi: float, step: float) -> int:
    # tolerate float noise so that 0..90 step 0.5 keeps its endpoint
    return int(math.floor((hi - lo) / step + 1e-9)) + 1


def _snap_index(value: float, lo: float, step: float, count: int) -> int:
    # half-up: a value midway between two grid points takes the upper one
    return int(np.clip(np.floor((value - lo) / step + 0.5), 0, count - 1))


def snap_to_grid(doa: DoA, grid: SearchGrid) -> DoA:
    i_theta = _snap_index(doa.theta, grid.theta_min, grid.step, grid.g_theta)
    i_phi = _snap_index(doa.phi, grid.phi_min, grid.step, grid.g_phi)
    return grid.point(i_theta, i_phi)
