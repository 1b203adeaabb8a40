from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from channel import as_generator
from channel.signal import RngLike

Activation = Literal["tanh", "sigmoid", "linear"]


class NetworkError(ValueError):
    pass


class StaleCacheError(NetworkError):
    pass


def activate(kind: Activation, z: np.ndarray) -> np.ndarray:
    if kind == "tanh":
        return np.tanh(z)
    if kind == "sigmoid":
        # split by sign so large |z| never overflows exp
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    if kind == "linear":
        return z
    raise NetworkError(f"unknown activation: {kind}")


def activation_grad(kind: Activation, a: np.ndarray) -> np.ndarray:
    """Derivative expressed through the activation output a."""
    if kind == "tanh":
        return 1.0 - a**2
    if kind == "sigmoid":
        return a * (1.0 - a)
    if kind == "linear":
        return np.ones_like(a)
    raise NetworkError(f"unknown activation: {kind}")


@dataclass(eq=False)
class DenseLayer:
    weights: np.ndarray
    biases: np.ndarray
    activation: Activation = "linear"

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64).reshape(-1)
        if self.weights.ndim != 2 or self.weights.shape[0] != self.biases.size:
            raise NetworkError(
                f"dense weights {self.weights.shape} do not match biases {self.biases.shape}"
            )
        if self.activation not in ("tanh", "sigmoid", "linear"):
            raise NetworkError(f"unknown activation: {self.activation}")

    @classmethod
    def glorot(cls, n_in: int, n_out: int, activation: Activation, rng: RngLike = None) -> "DenseLayer":
        limit = math.sqrt(6.0 / (n_in + n_out))
        weights = as_generator(rng).uniform(-limit, limit, size=(n_out, n_in))
        return cls(weights, np.zeros(n_out), activation)

    @property
    def n_in(self) -> int:
        return int(self.weights.shape[1])

    @property
    def n_out(self) -> int:
        return int(self.weights.shape[0])

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, tuple[np.ndarray, np.ndarray]]:
        if x.shape[-1] != self.n_in:
            raise NetworkError(f"dense layer expects {self.n_in} inputs, got {x.shape[-1]}")
        a = activate(self.activation, x @ self.weights.T + self.biases)
        return a, (x, a)

    def backward(
        self, cache: tuple[np.ndarray, np.ndarray], grad_out: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Returns (dE/dx, dE/dW, dE/db) for a batch-first cache."""
        x, a = cache
        dz = grad_out * activation_grad(self.activation, a)
        return dz @ self.weights, dz.T @ x, dz.sum(axis=0)


@dataclass(frozen=True)
class DropoutSpec:
    rate: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.rate < 1.0:
            raise NetworkError(f"dropout rate must be in [0, 1), got {self.rate}")

    def mask(self, shape: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
        """Inverted-dropout mask: kept units are scaled by 1/(1-rate)."""
        keep = rng.random(shape) >= self.rate
        return keep / (1.0 - self.rate)


@dataclass
class ForwardCache:
    owner: int
    version: int
    input_shape: tuple[int, ...]
    entries: list = field(default_factory=list)
