from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Literal, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from sklearn.model_selection import train_test_split

from channel import ChannelModel, PhaseVector, as_generator, interleave
from channel.signal import RngLike
from geometry import DoA, GeometryError, SceneGeometry, rt_path_table

THETA_SPAN = 90.0
PHI_SPAN = 180.0


class DatasetError(ValueError):
    pass


class DatasetConfig(BaseModel):
    n_train: int = 25_000
    n_test: int = 1_000
    validation_fraction: float = 0.2
    resolution: float = 0.5
    snr_set: List[float] = Field(default_factory=lambda: [-20.0, -10.0, 0.0, 10.0, 20.0])
    snapshots: int = 10
    seed: int = 0
    angle_sampling: Literal["grid", "continuous"] = "grid"
    snap_test_to_grid: bool = False
    noise_reference: Literal["signal", "nominal"] = "signal"
    snapshot_rotation: float = 0.0

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def _validate_dataset(self) -> "DatasetConfig":
        if self.n_train < 1 or self.n_test < 1:
            raise ValueError("dataset.n_train and dataset.n_test must be >= 1")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("dataset.validation_fraction must be in (0, 1)")
        if not self.resolution > 0:
            raise ValueError("dataset.resolution must be > 0")
        if self.snapshots < 1:
            raise ValueError("dataset.snapshots must be >= 1")
        if not self.snr_set:
            raise ValueError("dataset.snr_set must not be empty")
        if any(math.isnan(snr) for snr in self.snr_set):
            raise ValueError("dataset.snr_set must not contain NaN")
        return self


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """IRS observations (N, L, 2M^R) with normalized labels (N, 2), split into train/validation."""

    inputs: np.ndarray
    labels: np.ndarray
    train_index: np.ndarray
    val_index: np.ndarray

    @property
    def train_inputs(self) -> np.ndarray:
        return self.inputs[self.train_index]

    @property
    def train_labels(self) -> np.ndarray:
        return self.labels[self.train_index]

    @property
    def val_inputs(self) -> np.ndarray:
        return self.inputs[self.val_index]

    @property
    def val_labels(self) -> np.ndarray:
        return self.labels[self.val_index]

    @property
    def snapshots(self) -> int:
        return int(self.inputs.shape[1])


@dataclass(frozen=True, eq=False)
class ObservationSet:
    """Received matrices y (N, M^A, L) and true DoAs (N, 2) in degrees at one SNR."""

    snr_db: float
    y: np.ndarray
    doas: np.ndarray

    def __len__(self) -> int:
        return int(self.doas.shape[0])

    def doa(self, i: int) -> DoA:
        return DoA(float(self.doas[i, 0]), float(self.doas[i, 1]))


def angle_grid(span: float, resolution: float) -> np.ndarray:
    count = int(math.floor(span / resolution + 1e-9)) + 1
    return resolution * np.arange(count, dtype=np.float64)


def sample_angles(n: int, cfg: DatasetConfig, rng: RngLike = None, continuous: bool | None = None) -> np.ndarray:
    """(n, 2) DoAs in degrees, uniform over the FoV."""
    generator = as_generator(rng)
    if continuous is None:
        continuous = cfg.angle_sampling == "continuous"
    if continuous:
        theta = generator.uniform(0.0, THETA_SPAN, size=n)
        phi = generator.uniform(0.0, PHI_SPAN, size=n)
    else:
        thetas = angle_grid(THETA_SPAN, cfg.resolution)
        phis = angle_grid(PHI_SPAN, cfg.resolution)
        theta = thetas[generator.integers(0, thetas.size, size=n)]
        phi = phis[generator.integers(0, phis.size, size=n)]
    return np.stack([theta, phi], axis=1)


def source_samples(n: int, l: int, rng: RngLike = None, rotation: float = 0.0) -> np.ndarray:
    """(n, l) unit-modulus exponentials, one random initial phase per row."""
    psi = as_generator(rng).uniform(-math.pi, math.pi, size=n)
    return np.exp(1j * (rotation * np.arange(l)[None, :] + psi[:, None]))


def irs_steering(geom: SceneGeometry, doas: np.ndarray) -> np.ndarray:
    """a^RT for each row of ``doas``: shape (N, M^R)."""
    table = rt_path_table(geom, doas[:, 0], doas[:, 1])
    return np.exp(1j * 2.0 * math.pi * table / geom.wavelength)


def irs_observations(geom: SceneGeometry, doas: np.ndarray, sources: np.ndarray) -> np.ndarray:
    """Interleaved r = a^RT s per snapshot: shape (N, L, 2M^R)."""
    a_rt = irs_steering(geom, doas)
    return interleave(sources[:, :, None] * a_rt[:, None, :])


def normalize_label(doa: DoA) -> np.ndarray:
    return np.array([doa.theta / THETA_SPAN, doa.phi / PHI_SPAN])


def denormalize_label(pair: Sequence[float]) -> DoA:
    values = np.asarray(pair, dtype=np.float64).reshape(-1)
    if values.size != 2:
        raise DatasetError(f"label must hold two values, got {values.size}")
    try:
        return DoA(float(values[0]) * THETA_SPAN, float(values[1]) * PHI_SPAN)
    except GeometryError as exc:
        raise DatasetError(f"label {values.tolist()} is outside [0, 1]^2") from exc


def normalize_labels(doas: np.ndarray) -> np.ndarray:
    return np.asarray(doas, dtype=np.float64) / np.array([THETA_SPAN, PHI_SPAN])


def denormalize_labels(labels: np.ndarray) -> np.ndarray:
    return np.asarray(labels, dtype=np.float64) * np.array([THETA_SPAN, PHI_SPAN])


def generate_training_set(geom: SceneGeometry, cfg: DatasetConfig, n: int | None = None) -> TrainingSet:
    """Noiseless IRS observations; noise is added inside the training forward pass."""
    n = cfg.n_train if n is None else n
    if n < 2:
        raise DatasetError("a training set needs at least two examples to split")
    angle_seq, source_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    doas = sample_angles(n, cfg, np.random.default_rng(angle_seq))
    sources = source_samples(n, cfg.snapshots, np.random.default_rng(source_seq), cfg.snapshot_rotation)
    inputs = irs_observations(geom, doas, sources)
    train_index, val_index = train_test_split(
        np.arange(n), test_size=cfg.validation_fraction, random_state=cfg.seed, shuffle=True
    )
    return TrainingSet(inputs, normalize_labels(doas), np.sort(train_index), np.sort(val_index))


def received_matrices(
    channel: ChannelModel,
    phases: PhaseVector,
    doas: np.ndarray,
    sources: np.ndarray,
) -> np.ndarray:
    """Noiseless Y = a_r s for each row: shape (N, M^A, L)."""
    a_rt = irs_steering(channel.geometry, doas)
    a_r = (a_rt * phases.omega) @ channel.gain.T
    return a_r[:, :, None] * sources[:, None, :]


def add_awgn(
    y: np.ndarray,
    snr_db: np.ndarray | float,
    rng: RngLike = None,
    reference_power: np.ndarray | float | None = None,
) -> np.ndarray:
    """Complex AWGN per example; power defaults to each example's own energy.

    Batched form of ``channel.complex_awgn``: the real and imaginary parts get
    P_r / (2 M^A L SNR) each, so the noise energy equals P_r / SNR.
    """
    generator = as_generator(rng)
    n, m_a, l = y.shape
    snr_db = np.broadcast_to(np.asarray(snr_db, dtype=np.float64), (n,))
    if np.any(np.isnan(snr_db)):
        raise DatasetError("snr_db must not be NaN")
    if reference_power is None:
        power = np.sum(np.abs(y) ** 2, axis=(1, 2))
    else:
        power = np.broadcast_to(np.asarray(reference_power, dtype=np.float64), (n,))
    noise = generator.standard_normal((n, m_a, l, 2))
    noiseless = np.isposinf(snr_db)
    snr = np.where(noiseless, 1.0, 10.0 ** (np.where(noiseless, 0.0, snr_db) / 10.0))
    scale = np.where(noiseless, 0.0, np.sqrt(power / (2.0 * m_a * l * snr)))
    return y + scale[:, None, None] * (noise[..., 0] + 1j * noise[..., 1])


def generate_test_set(
    channel: ChannelModel,
    cfg: DatasetConfig,
    phases: PhaseVector,
    snr_db: float,
    rng: RngLike = None,
    n: int | None = None,
) -> ObservationSet:
    n = cfg.n_test if n is None else n
    angle_seq, source_seq, noise_seq = np.random.SeedSequence(
        as_generator(rng).integers(0, 2**63 - 1)
    ).spawn(3)
    doas = sample_angles(n, cfg, np.random.default_rng(angle_seq), continuous=not cfg.snap_test_to_grid)
    sources = source_samples(n, cfg.snapshots, np.random.default_rng(source_seq), cfg.snapshot_rotation)
    clean = received_matrices(channel, phases, doas, sources)
    reference = None if cfg.noise_reference == "signal" else channel.received_power
    y = add_awgn(clean, snr_db, np.random.default_rng(noise_seq), reference)
    return ObservationSet(float(snr_db), y, doas)


def generate_test_sets(
    channel: ChannelModel,
    cfg: DatasetConfig,
    phases: PhaseVector,
    snr_values: Sequence[float] | None = None,
) -> Dict[float, ObservationSet]:
    snr_values = list(cfg.snr_set if snr_values is None else snr_values)
    streams = np.random.SeedSequence([cfg.seed, 1]).spawn(len(snr_values))
    return {
        float(snr): generate_test_set(channel, cfg, phases, snr, np.random.default_rng(stream))
        for snr, stream in zip(snr_values, streams)
    }


def training_snr_draws(snr_set: Sequence[float], n: int, rng: RngLike = None) -> np.ndarray:
    return as_generator(rng).choice(np.asarray(snr_set, dtype=np.float64), size=n)


def empirical_snr_db(clean: np.ndarray, noisy: np.ndarray) -> float:
    signal = float(np.sum(np.abs(clean) ** 2))
    noise = float(np.sum(np.abs(noisy - clean) ** 2))
    return 10.0 * math.log10(signal / noise) if noise > 0 else math.inf

