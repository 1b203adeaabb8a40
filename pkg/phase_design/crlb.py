from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from channel import ChannelModel, PhaseVector, composite_steering, steering_vector_rt
from geometry import DoA, irs_positions

# projected information below this fraction of |d|^2 counts as zero
DEGENERACY_TOLERANCE = 1e-10
_ANGLE_EPS = 1e-12


class PhaseDesignError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SteeringJacobian:
    """Derivatives of a_r with respect to theta and phi (per radian)."""

    d_theta: np.ndarray
    d_phi: np.ndarray
    theta_degenerate: bool = False
    phi_degenerate: bool = False


@dataclass(frozen=True)
class CrlbValue:
    crlb_theta: float
    crlb_phi: float
    theta_degenerate: bool = False
    phi_degenerate: bool = False

    @property
    def total(self) -> float:
        return self.crlb_theta + self.crlb_phi


def _rt_derivatives(channel: ChannelModel, doa: DoA) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    geom = channel.geometry
    relative = irs_positions(geom) - np.asarray(geom.irs_offset, dtype=np.float64)
    x = relative[:, 0]
    y = relative[:, 1]
    theta, phi = doa.radians()
    dr_dtheta = -(x * math.sin(theta) * math.sin(phi) + y * math.sin(theta) * math.cos(phi))
    dr_dphi = x * math.cos(theta) * math.cos(phi) - y * math.cos(theta) * math.sin(phi)
    a_rt = steering_vector_rt(geom, doa)
    k = 2.0 * math.pi / geom.wavelength
    return a_rt, 1j * k * dr_dtheta * a_rt, 1j * k * dr_dphi * a_rt


def _degenerate_axes(doa: DoA) -> tuple[bool, bool]:
    theta, _ = doa.radians()
    return abs(math.sin(theta)) < _ANGLE_EPS, abs(math.cos(theta)) < _ANGLE_EPS


def steering_jacobian(channel: ChannelModel, phases: PhaseVector, doa: DoA) -> SteeringJacobian:
    _, da_theta, da_phi = _rt_derivatives(channel, doa)
    omega = phases.omega
    d_theta = channel.gain @ (omega * da_theta)
    d_phi = channel.gain @ (omega * da_phi)
    theta_flag, phi_flag = _degenerate_axes(doa)
    if theta_flag:
        d_theta = np.zeros_like(d_theta)
    if phi_flag:
        d_phi = np.zeros_like(d_phi)
    return SteeringJacobian(d_theta, d_phi, theta_flag, phi_flag)


def projected_information(a: np.ndarray, d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Re{d^H (I - a (a^H a)^-1 a^H) d} and |d|^2 for row-stacked a, d."""
    a_norm = np.sum(np.abs(a) ** 2, axis=-1)
    if np.any(a_norm <= 0.0):
        raise PhaseDesignError("composite steering vector vanished")
    d_norm = np.sum(np.abs(d) ** 2, axis=-1)
    cross = np.sum(np.conj(a) * d, axis=-1)
    return d_norm - np.abs(cross) ** 2 / a_norm, d_norm


def _bound(info: np.ndarray, d_norm: np.ndarray, scale: float) -> np.ndarray:
    degenerate = info <= DEGENERACY_TOLERANCE * d_norm
    degenerate |= d_norm <= 0.0
    safe = np.where(degenerate, 1.0, info)
    return np.where(degenerate, math.inf, scale / safe)


def crlb(
    channel: ChannelModel,
    phases: PhaseVector,
    doa: DoA,
    sigma_s2: float,
    sigma_n2: float,
) -> CrlbValue:
    a = composite_steering(channel, phases, doa)
    jac = steering_jacobian(channel, phases, doa)
    scale = sigma_n2 / (2.0 * sigma_s2)
    values = []
    for d in (jac.d_theta, jac.d_phi):
        info, d_norm = projected_information(a[None, :], d[None, :])
        values.append(float(_bound(info, d_norm, scale)[0]))
    return CrlbValue(
        crlb_theta=values[0],
        crlb_phi=values[1],
        theta_degenerate=math.isinf(values[0]),
        phi_degenerate=math.isinf(values[1]),
    )


def crlb_rmse_deg(value: CrlbValue) -> float:
    """Bound on the two-angle RMSE, in degrees."""
    return math.degrees(math.sqrt(0.5 * value.total))


class CrlbObjective:
    """CRLB_theta + CRLB_phi evaluated for stacks of reflection vectors omega.

    omega need not be unit modulus; the optimizer differentiates through the
    embedding space before projecting onto the circle.
    """

    def __init__(self, channel: ChannelModel, doa: DoA, sigma_s2: float, sigma_n2: float) -> None:
        a_rt, da_theta, da_phi = _rt_derivatives(channel, doa)
        theta_flag, phi_flag = _degenerate_axes(doa)
        if theta_flag or phi_flag:
            raise PhaseDesignError(f"DoA ({doa.theta}, {doa.phi}) lies on a degenerate FoV edge")
        self._gain_t = channel.gain.T
        self._a_rt = a_rt
        self._da_theta = da_theta
        self._da_phi = da_phi
        self._scale = sigma_n2 / (2.0 * sigma_s2)
        self.size = channel.m_r

    def components(self, omegas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        omegas = np.atleast_2d(omegas)
        a = (omegas * self._a_rt) @ self._gain_t
        out = []
        for da in (self._da_theta, self._da_phi):
            d = (omegas * da) @ self._gain_t
            info, d_norm = projected_information(a, d)
            out.append(_bound(info, d_norm, self._scale))
        return out[0], out[1]

    def batch(self, omegas: np.ndarray) -> np.ndarray:
        crlb_theta, crlb_phi = self.components(omegas)
        return crlb_theta + crlb_phi

    def __call__(self, omega: np.ndarray) -> float:
        return float(self.batch(omega[None, :])[0])

