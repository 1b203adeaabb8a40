from __future__ import annotations

import math

import numpy as np

from channel import ChannelModel, real_channel_matrix, wrap_phase
from channel.signal import RngLike, as_generator
from neural_core import NetworkError


def _blocks(x: np.ndarray, m_r: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] % 2 != 0:
        raise NetworkError(f"IRS layer input needs an even trailing length, got {x.shape[-1]}")
    if x.shape[-1] != 2 * m_r:
        raise NetworkError(f"IRS layer expects {2 * m_r} interleaved values, got {x.shape[-1]}")
    return x[..., 0::2], x[..., 1::2]


def irs_forward(x: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Rotate each interleaved pair by its phase: x_i e^{j phi_i} in real form.

    Block i is W_i = [[cos, -sin], [sin, cos]] applied to (x_{2i-1}, x_{2i});
    no bias, no activation. Leading axes (batch, snapshot) share phi.
    """
    phi = np.asarray(phi, dtype=np.float64)
    x1, x2 = _blocks(x, phi.size)
    c, s = np.cos(phi), np.sin(phi)
    z = np.empty(np.shape(x), dtype=np.float64)
    z[..., 0::2] = c * x1 - s * x2
    z[..., 1::2] = s * x1 + c * x2
    return z


def irs_backward(x: np.ndarray, phi: np.ndarray, grad_z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(dE/dphi summed over leading axes, dE/dx = W^T dE/dz)."""
    phi = np.asarray(phi, dtype=np.float64)
    x1, x2 = _blocks(x, phi.size)
    grad_z = np.asarray(grad_z, dtype=np.float64)
    if grad_z.shape != np.shape(x):
        raise NetworkError(f"gradient shape {grad_z.shape} does not match input shape {np.shape(x)}")
    c, s = np.cos(phi), np.sin(phi)
    g1 = grad_z[..., 0::2]
    g2 = grad_z[..., 1::2]
    z1 = c * x1 - s * x2
    z2 = s * x1 + c * x2
    # dz1/dphi = -z2, dz2/dphi = z1
    per_sample = -g1 * z2 + g2 * z1
    grad_phi = per_sample.reshape(-1, phi.size).sum(axis=0)
    grad_x = np.empty_like(grad_z)
    grad_x[..., 0::2] = c * g1 + s * g2
    grad_x[..., 1::2] = -s * g1 + c * g2
    return grad_phi, grad_x


class IrsLayer:
    """Trainable IRS phases; values stay unwrapped until export."""

    def __init__(self, phi: np.ndarray) -> None:
        phi = np.asarray(phi, dtype=np.float64).reshape(-1).copy()
        if not np.all(np.isfinite(phi)):
            raise NetworkError("IRS phases must be finite")
        self.phi = phi

    @classmethod
    def random(cls, m_r: int, rng: RngLike = None) -> "IrsLayer":
        return cls(as_generator(rng).uniform(-math.pi, math.pi, size=m_r))

    @property
    def size(self) -> int:
        return int(self.phi.size)

    def weight_matrix(self) -> np.ndarray:
        """Block-diagonal W, shape (2M^R, 2M^R)."""
        n = self.size
        w = np.zeros((2 * n, 2 * n), dtype=np.float64)
        idx = 2 * np.arange(n)
        c, s = np.cos(self.phi), np.sin(self.phi)
        w[idx, idx] = c
        w[idx, idx + 1] = -s
        w[idx + 1, idx] = s
        w[idx + 1, idx + 1] = c
        return w

    def forward(self, x: np.ndarray) -> np.ndarray:
        return irs_forward(x, self.phi)

    def backward(self, x: np.ndarray, grad_z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return irs_backward(x, self.phi, grad_z)

    def wrapped(self) -> np.ndarray:
        return wrap_phase(self.phi)


class FixedChannelLayer:
    """Non-trainable real expansion of H^AR (elementwise) A^AR."""

    def __init__(self, w_real: np.ndarray) -> None:
        w_real = np.array(w_real, dtype=np.float64)
        if w_real.ndim != 2 or w_real.shape[0] % 2 or w_real.shape[1] % 2:
            raise NetworkError(f"fixed channel weights must be 2M^A x 2M^R, got {w_real.shape}")
        w_real.setflags(write=False)
        self.w_real = w_real

    @classmethod
    def from_channel(cls, channel: ChannelModel) -> "FixedChannelLayer":
        return cls(real_channel_matrix(channel.gain))

    @property
    def n_in(self) -> int:
        return int(self.w_real.shape[1])

    @property
    def n_out(self) -> int:
        return int(self.w_real.shape[0])

    def forward(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        if z.shape[-1] != self.n_in:
            raise NetworkError(f"fixed channel layer expects {self.n_in} inputs, got {z.shape[-1]}")
        return z @ self.w_real.T

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        grad_out = np.asarray(grad_out, dtype=np.float64)
        if grad_out.shape[-1] != self.n_out:
            raise NetworkError(f"fixed channel layer emits {self.n_out} outputs, got {grad_out.shape[-1]}")
        return grad_out @ self.w_real

    def parameters(self) -> dict[str, np.ndarray]:
        return {}
