from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Mapping

import numpy as np

from .layers import NetworkError


@dataclass
class AdamState:
    learning_rate: float = 0.015
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    timestep: int = 0
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    state: AdamState,
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    gradient_descent: bool = False,
) -> None:
    """Update ``params`` in place; ``gradient_descent`` applies p -= lr * g instead."""
    for name, grad in grads.items():
        if name not in params:
            raise NetworkError(f"gradient for unknown parameter {name}")
        if params[name].shape != np.shape(grad):
            raise NetworkError(f"gradient shape {np.shape(grad)} does not match parameter {name}")
    state.timestep += 1
    lr = state.learning_rate
    if gradient_descent:
        for name, grad in grads.items():
            params[name] -= lr * grad
        return
    bias1 = 1.0 - state.beta1**state.timestep
    bias2 = 1.0 - state.beta2**state.timestep
    for name, grad in grads.items():
        m = state.first_moment.setdefault(name, np.zeros_like(grad))
        v = state.second_moment.setdefault(name, np.zeros_like(grad))
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad**2
        params[name] -= lr * (m / bias1) / (np.sqrt(v / bias2) + state.epsilon)


@dataclass
class ReduceLROnPlateau:
    factor: float = 0.5
    patience: int = 5
    min_lr: float = 1e-5
    best: float = math.inf
    wait: int = 0

    def step(self, val_loss: float, learning_rate: float) -> float:
        """Learning rate to use for the next epoch."""
        if val_loss < self.best:
            self.best = val_loss
            self.wait = 0
            return learning_rate
        self.wait += 1
        if self.wait >= self.patience:
            self.wait = 0
            if learning_rate > self.min_lr:
                return max(learning_rate * self.factor, self.min_lr)
        return learning_rate
