from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

# Real matrix whose rows are snapshots and whose columns interleave [a_1, b_1, a_2, b_2, ...].
InterleavedSignal = npt.NDArray[np.float64]

RngLike = int | np.random.Generator | np.random.SeedSequence | None


class ChannelError(ValueError):
    pass


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True, eq=False)
class SourceSignal:
    """Unit-modulus narrow-band source samples s_1..s_L."""

    samples: np.ndarray

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.complex128).reshape(-1)
        if samples.size < 1:
            raise ChannelError("source signal needs at least one snapshot")
        if not np.allclose(np.abs(samples), 1.0, rtol=0.0, atol=1e-12):
            raise ChannelError("source samples must be unit modulus")
        object.__setattr__(self, "samples", samples)

    @property
    def snapshots(self) -> int:
        return int(self.samples.size)

    @classmethod
    def constant(cls, l: int, phase: float = 0.0) -> "SourceSignal":
        return cls(np.full(l, np.exp(1j * phase), dtype=np.complex128))

    @classmethod
    def exponential(cls, l: int, rng: RngLike = None, rotation: float = 0.0) -> "SourceSignal":
        """s_l = exp(j(rotation * l + psi)) with psi uniform on [-pi, pi)."""
        psi = as_generator(rng).uniform(-math.pi, math.pi)
        return cls(np.exp(1j * (rotation * np.arange(l) + psi)))


def interleave(x: npt.ArrayLike) -> InterleavedSignal:
    """[a_1 + j b_1, a_2 + j b_2, ...] -> [a_1, b_1, a_2, b_2, ...] along the last axis."""
    values = np.asarray(x, dtype=np.complex128)
    out = np.empty(values.shape[:-1] + (2 * values.shape[-1],), dtype=np.float64)
    out[..., 0::2] = values.real
    out[..., 1::2] = values.imag
    return out


def deinterleave(x: npt.ArrayLike) -> np.ndarray:
    values = np.asarray(x, dtype=np.float64)
    if values.ndim == 0 or values.shape[-1] % 2 != 0:
        raise ChannelError(f"interleaved data needs an even trailing length, got shape {values.shape}")
    return values[..., 0::2] + 1j * values[..., 1::2]


def snr_linear(snr_db: float) -> float:
    return 10.0 ** (float(snr_db) / 10.0)


def noise_variance(snr_db: float, received_power: float, m_a: int, l: int) -> float:
    """Complex noise variance sigma_n^2, twice the per-component variance of awgn_real."""
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return float(received_power) / (m_a * l * snr_linear(snr_db))


def awgn_real(
    snr_db: float,
    received_power: float,
    m_a: int,
    l: int,
    rng_seed: RngLike = None,
) -> np.ndarray:
    """Real noise matrix of shape (2 M^A, L) scaled by sqrt(P_r / (2 M^A L SNR))."""
    if math.isnan(snr_db):
        raise ChannelError("snr_db must not be NaN")
    n0 = as_generator(rng_seed).standard_normal((2 * m_a, l))
    if math.isinf(snr_db) and snr_db > 0:
        return np.zeros_like(n0)
    scale = math.sqrt(float(received_power) / (2.0 * m_a * l * snr_linear(snr_db)))
    return scale * n0


def complex_awgn(
    snr_db: float,
    received_power: float,
    m_a: int,
    l: int,
    rng_seed: RngLike = None,
) -> np.ndarray:
    """Complex (M^A, L) counterpart of awgn_real; rows of the real matrix interleave re/im."""
    real = awgn_real(snr_db, received_power, m_a, l, rng_seed)
    return deinterleave(real.T).T


def signal_energy(y: npt.ArrayLike) -> float:
    values = np.asarray(y)
    return float(np.sum(np.abs(values) ** 2))
