from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List

import numpy as np

from channel import ChannelModel, PhaseVector, interleave
from channel.signal import RngLike, as_generator
from dataset import denormalize_labels
from geometry import DoA, SceneGeometry, geometry_hash
from neural_core import (
    ForwardCache,
    MlpRegressor,
    NetworkError,
    StaleCacheError,
    fc_regressor,
    load_parameters,
    save_parameters,
)

from .layers import FixedChannelLayer, IrsLayer

IRS_PARAM = "irs.phi"
REGRESSOR_PREFIX = "regressor."


@dataclass
class EndToEndCache:
    version: int
    x: np.ndarray
    regressor: ForwardCache


class EndToEndModel:
    """IRS layer -> fixed channel layer -> (+ AWGN) -> FC regressor.

    ``train_irs=False`` keeps the IRS phases at their initialization while the
    regressor trains.
    """

    def __init__(
        self,
        geometry: SceneGeometry,
        irs: IrsLayer,
        channel_layer: FixedChannelLayer,
        regressor: MlpRegressor,
        train_irs: bool = True,
    ) -> None:
        if irs.size != geometry.m_r or channel_layer.n_in != 2 * geometry.m_r:
            raise NetworkError("IRS layer and fixed channel layer must match the geometry's M^R")
        if regressor.input_shape[-1] != channel_layer.n_out:
            raise NetworkError(
                f"regressor expects {regressor.input_shape[-1]} features per snapshot, "
                f"channel emits {channel_layer.n_out}"
            )
        self.geometry = geometry
        self.irs = irs
        self.channel_layer = channel_layer
        self.regressor = regressor
        self.train_irs = train_irs
        self.version = 0

    @classmethod
    def build(
        cls,
        geometry: SceneGeometry,
        snapshots: int,
        rng: RngLike = None,
        train_irs: bool = True,
        channel: ChannelModel | None = None,
    ) -> "EndToEndModel":
        generator = as_generator(rng)
        channel = channel or ChannelModel.from_geometry(geometry)
        irs = IrsLayer.random(geometry.m_r, generator)
        regressor = fc_regressor((snapshots, 2 * geometry.m_a), generator)
        return cls(geometry, irs, FixedChannelLayer.from_channel(channel), regressor, train_irs)

    @property
    def snapshots(self) -> int:
        return self.regressor.input_shape[0]

    def parameters(self) -> Dict[str, np.ndarray]:
        params = {IRS_PARAM: self.irs.phi}
        for name, value in self.regressor.parameters().items():
            params[REGRESSOR_PREFIX + name] = value
        return params

    def trainable_parameters(self) -> Dict[str, np.ndarray]:
        params = self.parameters()
        if not self.train_irs:
            params.pop(IRS_PARAM)
        return params

    def mark_updated(self) -> None:
        self.version += 1
        self.regressor.mark_updated()

    def training_path(self, x: np.ndarray, noise: np.ndarray | None = None) -> np.ndarray:
        """Regressor input for IRS observations x (..., L, 2M^R): IRS, channel, then noise."""
        out = self.channel_layer.forward(self.irs.forward(x))
        if noise is not None:
            noise = np.asarray(noise, dtype=np.float64)
            if noise.shape != out.shape:
                raise NetworkError(f"noise shape {noise.shape} does not match signal shape {out.shape}")
            out = out + noise
        return out

    def forward(
        self,
        x: np.ndarray,
        noise: np.ndarray | None = None,
        training: bool = False,
        rng: RngLike = None,
    ) -> tuple[np.ndarray, EndToEndCache]:
        x = np.asarray(x, dtype=np.float64)
        pred, reg_cache = self.regressor.forward(self.training_path(x, noise), training, rng)
        return pred, EndToEndCache(self.version, x, reg_cache)

    def backward(self, cache: EndToEndCache, grad_out: np.ndarray) -> Dict[str, np.ndarray]:
        if cache.version != self.version:
            raise StaleCacheError(f"forward cache is from version {cache.version}, model is at {self.version}")
        reg_grads = self.regressor.backward(cache.regressor, grad_out)
        # additive noise passes gradients through unchanged
        grad_z = self.channel_layer.backward(reg_grads.inputs)
        grad_phi, _ = self.irs.backward(cache.x, grad_z)
        grads = {IRS_PARAM: grad_phi}
        for name, value in reg_grads.params.items():
            grads[REGRESSOR_PREFIX + name] = value
        return grads

    def predict_normalized(self, inputs: np.ndarray) -> np.ndarray:
        return self.regressor.predict(inputs)


def export_phases(model: EndToEndModel) -> PhaseVector:
    return PhaseVector(model.irs.wrapped())


def received_to_input(y: np.ndarray) -> np.ndarray:
    """Y (..., M^A, L) complex -> regressor input (..., L, 2M^A)."""
    y = np.asarray(y, dtype=np.complex128)
    return interleave(np.swapaxes(y, -1, -2))


def predict_doas(model: EndToEndModel, ys: np.ndarray) -> np.ndarray:
    """Batch of received matrices (N, M^A, L) -> DoAs (N, 2) in degrees.

    Only the regressor runs: the physical channel already applied the IRS.
    """
    ys = np.asarray(ys)
    expected = (model.geometry.m_a, model.snapshots)
    if ys.ndim != 3 or ys.shape[1:] != expected:
        raise NetworkError(f"expected received matrices of shape (N, {expected[0]}, {expected[1]}), got {ys.shape}")
    return denormalize_labels(model.predict_normalized(received_to_input(ys)))


def predict_doa(model: EndToEndModel, y: np.ndarray) -> DoA:
    theta, phi = predict_doas(model, np.asarray(y)[None, ...])[0]
    return DoA(float(theta), float(phi))


def write_phases(path: Path, phases: PhaseVector) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{value!r}\n" for value in phases.phases.tolist()), encoding="utf-8")
    return path


def read_phases(path: Path) -> PhaseVector:
    lines = [line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    try:
        return PhaseVector(np.array([float(line) for line in lines]))
    except ValueError as exc:
        raise NetworkError(f"{path} is not a phase export: {exc}") from exc


def save_model(path: Path, model: EndToEndModel, extra_meta: dict | None = None) -> Path:
    """Model artifact plus a ``<name>.phases.txt`` sidecar of the wrapped phases."""
    meta = {
        "kind": "end-to-end",
        "geometry": json.loads(model.geometry.model_dump_json()),
        "geometry_hash": geometry_hash(model.geometry),
        "input_shape": list(model.regressor.input_shape),
        "train_irs": model.train_irs,
        **(extra_meta or {}),
    }
    save_parameters(path, model.parameters(), meta)
    write_phases(phases_sidecar(path), export_phases(model))
    return path


def phases_sidecar(path: Path) -> Path:
    return path.with_suffix(".phases.txt")


def load_model(path: Path, geometry: SceneGeometry | None = None) -> EndToEndModel:
    if not path.exists():
        raise NetworkError(f"model artifact not found: {path}")
    params, meta = load_parameters(path)
    if meta.get("kind") != "end-to-end":
        raise NetworkError(f"{path} does not hold an end-to-end model")
    stored = SceneGeometry.model_validate(meta["geometry"])
    if geometry is not None and geometry_hash(geometry) != meta["geometry_hash"]:
        raise NetworkError(
            f"model {path} was trained for geometry {meta['geometry_hash']}, expected {geometry_hash(geometry)}"
        )
    shape: List[int] = meta["input_shape"]
    model = EndToEndModel.build(stored, int(shape[0]), rng=0, train_irs=bool(meta.get("train_irs", True)))
    target = model.parameters()
    if set(params) != set(target):
        raise NetworkError(f"{path} tensors {sorted(params)} do not match the model layout")
    for name, value in params.items():
        if target[name].shape != value.shape:
            raise NetworkError(f"{path} tensor {name} has shape {value.shape}, expected {target[name].shape}")
        target[name][...] = value
    model.mark_updated()
    return model
