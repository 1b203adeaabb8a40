from __future__ import annotations

from dataclasses import dataclass
from itertools import count
from typing import Dict, Iterator, List, Sequence, Tuple, Union

import numpy as np

from channel import as_generator
from channel.signal import RngLike

from .layers import DenseLayer, DropoutSpec, ForwardCache, NetworkError, StaleCacheError

Layer = Union[DenseLayer, DropoutSpec]

# hidden widths, activations and dropout rates of the FC DoA regressor
FC_HIDDEN: Tuple[Tuple[int, str, float], ...] = ((86, "tanh", 0.25), (48, "tanh", 0.25), (32, "tanh", 0.5))

_model_ids = count(1)


@dataclass(frozen=True, eq=False)
class Gradients:
    params: Dict[str, np.ndarray]
    inputs: np.ndarray


class MlpRegressor:
    """Flatten followed by dense/dropout layers; batch-first inputs.

    Every parameter change must go through ``mark_updated`` (optimizer steps
    and loads do) so caches from earlier forwards are rejected by ``backward``.
    """

    def __init__(self, input_shape: Sequence[int], layers: List[Layer]) -> None:
        self.input_shape = tuple(int(n) for n in input_shape)
        self.layers = list(layers)
        self.version = 0
        self._id = next(_model_ids)
        expected = int(np.prod(self.input_shape))
        for layer in self.dense_layers():
            if layer.n_in != expected:
                raise NetworkError(f"dense layer expects {layer.n_in} inputs, previous width is {expected}")
            expected = layer.n_out

    def dense_layers(self) -> Iterator[DenseLayer]:
        return (layer for layer in self.layers if isinstance(layer, DenseLayer))

    @property
    def n_outputs(self) -> int:
        return list(self.dense_layers())[-1].n_out

    def parameters(self) -> Dict[str, np.ndarray]:
        params: Dict[str, np.ndarray] = {}
        for i, layer in enumerate(self.dense_layers()):
            params[f"dense{i}.weights"] = layer.weights
            params[f"dense{i}.biases"] = layer.biases
        return params

    def mark_updated(self) -> None:
        self.version += 1

    def _batch(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape == self.input_shape:
            x = x[None, ...]
        if x.shape[1:] != self.input_shape:
            raise NetworkError(f"expected input shape (batch, {self.input_shape}), got {x.shape}")
        return x.reshape(x.shape[0], -1)

    def forward(
        self, x: np.ndarray, training: bool = False, rng: RngLike = None
    ) -> tuple[np.ndarray, ForwardCache]:
        """Batch predictions in (0, 1)^2 plus the cache ``backward`` needs."""
        h = self._batch(x)
        cache = ForwardCache(self._id, self.version, tuple(np.shape(x)))
        generator = as_generator(rng) if training else None
        for layer in self.layers:
            if isinstance(layer, DenseLayer):
                h, entry = layer.forward(h)
                cache.entries.append(entry)
            elif training and layer.rate > 0:
                mask = layer.mask(h.shape, generator)
                h = h * mask
                cache.entries.append(mask)
            else:
                cache.entries.append(None)
        return h, cache

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x, training=False)[0]

    def backward(self, cache: ForwardCache, grad_out: np.ndarray) -> Gradients:
        if cache.owner != self._id or cache.version != self.version:
            raise StaleCacheError(
                f"forward cache is from version {cache.version}, model is at {self.version}"
            )
        grad = np.asarray(grad_out, dtype=np.float64)
        dense = list(self.dense_layers())
        params: Dict[str, np.ndarray] = {}
        i = len(dense)
        for layer, entry in zip(reversed(self.layers), reversed(cache.entries)):
            if isinstance(layer, DenseLayer):
                i -= 1
                grad, d_w, d_b = layer.backward(entry, grad)
                params[f"dense{i}.weights"] = d_w
                params[f"dense{i}.biases"] = d_b
            elif entry is not None:
                grad = grad * entry
        ordered = {name: params[name] for name in self.parameters()}
        return Gradients(ordered, grad.reshape(cache.input_shape))


def fc_regressor(input_shape: Sequence[int], rng: RngLike = None) -> MlpRegressor:
    generator = as_generator(rng)
    layers: List[Layer] = []
    width = int(np.prod(input_shape))
    for n_out, activation, rate in FC_HIDDEN:
        layers.append(DenseLayer.glorot(width, n_out, activation, generator))  # type: ignore[arg-type]
        layers.append(DropoutSpec(rate))
        width = n_out
    layers.append(DenseLayer.glorot(width, 2, "sigmoid", generator))
    return MlpRegressor(input_shape, layers)


def parameter_count(model: object) -> int:
    """Trainable scalars of anything exposing ``parameters()``."""
    return int(sum(p.size for p in model.parameters().values()))  # type: ignore[attr-defined]
