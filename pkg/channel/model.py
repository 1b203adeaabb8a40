from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from geometry import DoA, SceneGeometry, irs_path_differences, pairwise_distances

from .signal import ChannelError, SourceSignal


def wrap_phase(phases: np.ndarray | float) -> np.ndarray:
    """Map radians onto [-pi, pi)."""
    values = np.asarray(phases, dtype=np.float64)
    wrapped = np.mod(values + math.pi, 2.0 * math.pi) - math.pi
    # mod can round up to exactly 2*pi for inputs just below an odd multiple of pi
    return np.where(wrapped >= math.pi, wrapped - 2.0 * math.pi, wrapped)


@dataclass(frozen=True, eq=False)
class PhaseVector:
    """IRS phase shifts Phi (radians); omega = exp(j Phi) is unit modulus by construction."""

    phases: np.ndarray

    def __post_init__(self) -> None:
        phases = np.asarray(self.phases, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(phases)):
            raise ChannelError("IRS phases must be finite")
        object.__setattr__(self, "phases", phases)

    @property
    def omega(self) -> np.ndarray:
        return np.exp(1j * self.phases)

    @property
    def size(self) -> int:
        return int(self.phases.size)

    def wrapped(self) -> "PhaseVector":
        return PhaseVector(wrap_phase(self.phases))

    @classmethod
    def zeros(cls, m_r: int) -> "PhaseVector":
        return cls(np.zeros(m_r))

    @classmethod
    def from_omega(cls, omega: np.ndarray) -> "PhaseVector":
        return cls(np.angle(np.asarray(omega, dtype=np.complex128))).wrapped()


@dataclass(frozen=True, eq=False)
class ChannelModel:
    """Array-IRS channel: steering matrix A^AR, amplitude matrix H^AR and P_r."""

    geometry: SceneGeometry
    steering_ar: np.ndarray
    amplitude_ar: np.ndarray
    received_power: float = 1.0

    def __post_init__(self) -> None:
        shape = (self.geometry.m_a, self.geometry.m_r)
        if self.steering_ar.shape != shape or self.amplitude_ar.shape != shape:
            raise ChannelError(
                f"channel matrices must have shape {shape}, got "
                f"{self.steering_ar.shape} and {self.amplitude_ar.shape}"
            )
        gain = self.amplitude_ar * self.steering_ar
        gain.setflags(write=False)
        object.__setattr__(self, "_gain", gain)

    @classmethod
    def from_geometry(cls, geom: SceneGeometry, received_power: float = 1.0) -> "ChannelModel":
        return cls(
            geometry=geom,
            steering_ar=steering_matrix_ar(geom),
            amplitude_ar=amplitude_matrix(geom, received_power),
            received_power=float(received_power),
        )

    @property
    def gain(self) -> np.ndarray:
        """H^AR (elementwise) A^AR."""
        return self._gain  # type: ignore[attr-defined]

    @property
    def m_a(self) -> int:
        return self.geometry.m_a

    @property
    def m_r(self) -> int:
        return self.geometry.m_r


def steering_matrix_ar(geom: SceneGeometry) -> np.ndarray:
    distances = pairwise_distances(geom)
    return np.exp(-1j * 2.0 * math.pi * distances / geom.wavelength)


def steering_vector_rt(geom: SceneGeometry, doa: DoA) -> np.ndarray:
    # sign is opposite to steering_matrix_ar
    return np.exp(1j * 2.0 * math.pi * irs_path_differences(geom, doa) / geom.wavelength)


def amplitude_matrix(geom: SceneGeometry, received_power: float = 1.0) -> np.ndarray:
    distances = pairwise_distances(geom)
    return np.sqrt(received_power / (4.0 * math.pi * distances**2))


def composite_steering(channel: ChannelModel, phases: PhaseVector, doa: DoA) -> np.ndarray:
    """a_r = (H^AR . A^AR) diag(omega) a^RT."""
    if phases.size != channel.m_r:
        raise ChannelError(f"expected {channel.m_r} IRS phases, got {phases.size}")
    a_rt = steering_vector_rt(channel.geometry, doa)
    return channel.gain @ (phases.omega * a_rt)


def received_signal(
    a_r: np.ndarray,
    s: SourceSignal,
    noise: np.ndarray | None = None,
) -> np.ndarray:
    """Y = a_r s + N with shape (M^A, L)."""
    steering = np.asarray(a_r, dtype=np.complex128).reshape(-1)
    y = np.outer(steering, s.samples)
    if noise is None:
        return y
    noise = np.asarray(noise)
    if noise.shape != y.shape:
        raise ChannelError(f"noise shape {noise.shape} does not match signal shape {y.shape}")
    return y + noise


def real_channel_matrix(gain: np.ndarray) -> np.ndarray:
    """Real 2M^A x 2M^R matrix acting on interleaved vectors like the complex gain does."""
    gain = np.asarray(gain, dtype=np.complex128)
    m_a, m_r = gain.shape
    out = np.zeros((2 * m_a, 2 * m_r), dtype=np.float64)
    out[0::2, 0::2] = gain.real
    out[0::2, 1::2] = -gain.imag
    out[1::2, 0::2] = gain.imag
    out[1::2, 1::2] = gain.real
    return out
