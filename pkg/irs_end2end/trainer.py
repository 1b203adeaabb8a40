from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from channel.signal import RngLike, as_generator
from dataset import TrainingSet, training_snr_draws
from neural_core import AdamState, ReduceLROnPlateau, adam_step, mse_grad, mse_loss

from .model import EndToEndModel


class TrainingError(RuntimeError):
    pass


class TrainingConfig(BaseModel):
    epochs: int = 50
    batch_size: int = 64
    learning_rate: float = 0.015
    snr_set: List[float] = Field(default_factory=lambda: [-20.0, -10.0, 0.0, 10.0, 20.0])
    lr_factor: float = 0.5
    lr_patience: int = 5
    lr_min: float = 1e-5
    gradient_descent: bool = False
    train_irs: bool = True
    noise_reference: Literal["signal", "nominal"] = "signal"
    nominal_power: float = 1.0
    seed: int = 0

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def _validate_training(self) -> "TrainingConfig":
        if self.epochs < 0:
            raise ValueError("training.epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("training.batch_size must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("training.learning_rate must be >= 0")
        if not self.snr_set:
            raise ValueError("training.snr_set must not be empty")
        if not 0 < self.lr_factor < 1:
            raise ValueError("training.lr_factor must be in (0, 1)")
        if self.lr_patience < 1:
            raise ValueError("training.lr_patience must be >= 1")
        return self


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    learning_rate: float


@dataclass
class TrainingResult:
    model: EndToEndModel
    curve: List[EpochRecord] = field(default_factory=list)

    @property
    def initial_val_loss(self) -> float:
        return self.curve[0].val_loss if self.curve else math.nan

    @property
    def final_val_loss(self) -> float:
        return self.curve[-1].val_loss if self.curve else math.nan


def channel_noise(
    clean: np.ndarray,
    snr_db: np.ndarray,
    rng: np.random.Generator,
    nominal_power: float | None = None,
) -> np.ndarray:
    """Real AWGN for a batch of interleaved channel outputs (B, L, 2M^A)."""
    batch, l, width = clean.shape
    m_a = width // 2
    if nominal_power is None:
        power = np.sum(clean**2, axis=(1, 2))
    else:
        power = np.full(batch, float(nominal_power))
    snr = 10.0 ** (np.asarray(snr_db, dtype=np.float64) / 10.0)
    scale = np.sqrt(power / (2.0 * m_a * l * snr))
    return scale[:, None, None] * rng.standard_normal(clean.shape)


def _noisy_loss(
    model: EndToEndModel,
    inputs: np.ndarray,
    labels: np.ndarray,
    snr_db: np.ndarray,
    rng: np.random.Generator,
    cfg: TrainingConfig,
) -> float:
    reference = None if cfg.noise_reference == "signal" else cfg.nominal_power
    clean = model.training_path(inputs)
    noise = channel_noise(clean, snr_db, rng, reference)
    return mse_loss(model.predict_normalized(clean + noise), labels)


def validation_loss(model: EndToEndModel, data: TrainingSet, cfg: TrainingConfig) -> float:
    """Inference-mode loss with noise from a stream reseeded identically on every call."""
    rng = np.random.default_rng([cfg.seed, 2])
    inputs = data.val_inputs
    labels = data.val_labels
    snr_db = training_snr_draws(cfg.snr_set, inputs.shape[0], rng)
    total = 0.0
    for start in range(0, inputs.shape[0], 1024):
        stop = start + 1024
        batch_loss = _noisy_loss(model, inputs[start:stop], labels[start:stop], snr_db[start:stop], rng, cfg)
        total += batch_loss * labels[start:stop].size
    return total / labels.size


def train_end_to_end(
    model: EndToEndModel,
    data: TrainingSet,
    cfg: TrainingConfig,
    rng: RngLike = None,
    verbose: bool = False,
) -> TrainingResult:
    """Joint Adam training of the IRS phases and the regressor against MSE.

    Every epoch reshuffles, draws a fresh SNR per sample from ``cfg.snr_set``
    and fresh channel noise; dropout is active only for the training batches.
    """
    if data.train_index.size == 0 or data.val_index.size == 0:
        raise TrainingError("training and validation splits must both be non-empty")
    if data.inputs.shape[1] != model.snapshots:
        raise TrainingError(
            f"dataset has {data.inputs.shape[1]} snapshots, model expects {model.snapshots}"
        )
    generator = as_generator(cfg.seed if rng is None else rng)
    state = AdamState(learning_rate=cfg.learning_rate)
    scheduler = ReduceLROnPlateau(cfg.lr_factor, cfg.lr_patience, cfg.lr_min)
    reference = None if cfg.noise_reference == "signal" else cfg.nominal_power
    inputs = data.train_inputs
    labels = data.train_labels
    n = inputs.shape[0]
    result = TrainingResult(model)

    for epoch in range(1, cfg.epochs + 1):
        order = generator.permutation(n)
        snr_db = training_snr_draws(cfg.snr_set, n, generator)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            x = inputs[idx]
            clean = model.training_path(x)
            noise = channel_noise(clean, snr_db[idx], generator, reference)
            pred, cache = model.forward(x, noise, training=True, rng=generator)
            loss = mse_loss(pred, labels[idx])
            if not math.isfinite(loss):
                raise TrainingError(f"loss became {loss} at epoch {epoch}, batch starting {start}")
            total += loss * idx.size
            grads = model.backward(cache, mse_grad(pred, labels[idx]))
            params = model.trainable_parameters()
            adam_step(
                state,
                params,
                {name: grads[name] for name in params},
                gradient_descent=cfg.gradient_descent,
            )
            model.mark_updated()
        train_loss = total / n
        val_loss = validation_loss(model, data, cfg)
        if not math.isfinite(val_loss):
            raise TrainingError(f"validation loss became {val_loss} at epoch {epoch}")
        record = EpochRecord(epoch, train_loss, val_loss, state.learning_rate)
        result.curve.append(record)
        if verbose:
            print(
                f"[trainer] epoch={epoch} train_loss={train_loss:.6f} "
                f"val_loss={val_loss:.6f} lr={state.learning_rate:.3g}"
            )
        state.learning_rate = scheduler.step(val_loss, state.learning_rate)
    return result


def write_learning_curve(path: Path, curve: List[EpochRecord], header_comment: str | None = None) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        if header_comment:
            handle.write(f"# {header_comment}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["epoch", "train_loss", "val_loss", "learning_rate"])
        for row in curve:
            writer.writerow(
                [row.epoch, f"{row.train_loss:.10g}", f"{row.val_loss:.10g}", f"{row.learning_rate:.10g}"]
            )
    return path
