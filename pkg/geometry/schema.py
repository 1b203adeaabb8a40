from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

SPEED_OF_LIGHT = 3e8

Vec3 = Tuple[float, float, float]


class GeometryError(ValueError):
    pass


class SceneGeometry(BaseModel):
    """Array (yz-plane UPA) and IRS (xy-plane UPA) layout.

    Defaults reproduce the 5x5 / 5x5 preset at 1 GHz: the array at lambda/2
    spacing one meter up and one meter along y from the IRS corner, the IRS
    at lambda/4 spacing on the origin, target 10 m away.
    """

    m_a_y: int = 5
    m_a_z: int = 5
    m_r_x: int = 5
    m_r_y: int = 5
    d_a_y: float = 0.15
    d_a_z: float = 0.15
    d_r_x: float = 0.075
    d_r_y: float = 0.075
    wavelength: float = 0.3
    array_offset: Vec3 = (0.0, 1.0, 1.0)
    irs_offset: Vec3 = (0.0, 0.0, 0.0)
    source_range: float = 10.0

    model_config = ConfigDict(extra="forbid", frozen=True)

    @model_validator(mode="after")
    def _validate_geometry(self) -> "SceneGeometry":
        for name in ("m_a_y", "m_a_z", "m_r_x", "m_r_y"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"geometry.{name} must be >= 1")
        for name in ("d_a_y", "d_a_z", "d_r_x", "d_r_y"):
            if not float(getattr(self, name)) > 0.0:
                raise ValueError(f"geometry.{name} must be > 0")
        if not self.wavelength > 0.0:
            raise ValueError("geometry.wavelength must be > 0")
        if self.source_range <= far_field_distance(self):
            raise ValueError(
                "geometry.source_range must exceed the far-field distance "
                f"{far_field_distance(self):.4g} m"
            )
        return self

    @classmethod
    def from_frequency(cls, carrier_hz: float, **overrides: object) -> "SceneGeometry":
        wavelength = SPEED_OF_LIGHT / float(carrier_hz)
        fields: dict[str, object] = {
            "wavelength": wavelength,
            "d_a_y": wavelength / 2,
            "d_a_z": wavelength / 2,
            "d_r_x": wavelength / 4,
            "d_r_y": wavelength / 4,
        }
        fields.update(overrides)
        return cls(**fields)

    @property
    def m_a(self) -> int:
        return self.m_a_y * self.m_a_z

    @property
    def m_r(self) -> int:
        return self.m_r_x * self.m_r_y


def far_field_distance(geom: SceneGeometry) -> float:
    largest = max((geom.m_a_y - 1) * geom.d_a_y, (geom.m_a_z - 1) * geom.d_a_z)
    return 2.0 * largest**2 / geom.wavelength


def geometry_hash(geom: SceneGeometry) -> str:
    payload = geom.model_dump_json().encode("utf-8")
    return hashlib.sha256(payload).hexdigest()[:16]


@dataclass(frozen=True)
class DoA:
    """Elevation/azimuth pair in degrees, theta in [0, 90], phi in [0, 180]."""

    theta: float
    phi: float

    def __post_init__(self) -> None:
        theta = float(self.theta)
        phi = float(self.phi)
        if not math.isfinite(theta) or not math.isfinite(phi):
            raise GeometryError(f"DoA must be finite, got ({theta}, {phi})")
        if not 0.0 <= theta <= 90.0:
            raise GeometryError(f"DoA.theta must be within [0, 90], got {theta}")
        if not 0.0 <= phi <= 180.0:
            raise GeometryError(f"DoA.phi must be within [0, 180], got {phi}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)

    def radians(self) -> tuple[float, float]:
        return math.radians(self.theta), math.radians(self.phi)

    def as_array(self) -> np.ndarray:
        return np.array([self.theta, self.phi], dtype=np.float64)
