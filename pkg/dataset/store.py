from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from geometry import SceneGeometry, geometry_hash

from .generate import DatasetConfig, DatasetError, TrainingSet


def save_dataset(
    path: Path,
    data: TrainingSet,
    geom: SceneGeometry,
    cfg: DatasetConfig,
    config_hash: str | None = None,
) -> Path:
    header = {
        "geometry_hash": geometry_hash(geom),
        "config_hash": config_hash,
        "dataset": cfg.model_dump(),
        "seed": cfg.seed,
        "input_shape": list(data.inputs.shape[1:]),
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as handle:
        np.savez(
            handle,
            header=np.array(json.dumps(header, sort_keys=True)),
            labels=data.labels,
            inputs=data.inputs.reshape(data.inputs.shape[0], -1),
            train_index=data.train_index,
            val_index=data.val_index,
        )
    return path


def read_header(path: Path) -> dict:
    if not path.exists():
        raise DatasetError(f"dataset not found: {path}")
    try:
        with np.load(path, allow_pickle=False) as archive:
            return json.loads(str(archive["header"]))
    except (OSError, KeyError, ValueError) as exc:
        raise DatasetError(f"unreadable dataset {path}: {exc}") from exc


def load_dataset(path: Path, geom: SceneGeometry) -> tuple[TrainingSet, DatasetConfig]:
    if not path.exists():
        raise DatasetError(f"dataset not found: {path}")
    try:
        with np.load(path, allow_pickle=False) as archive:
            header = json.loads(str(archive["header"]))
            labels = archive["labels"]
            flat = archive["inputs"]
            train_index = archive["train_index"]
            val_index = archive["val_index"]
    except (OSError, KeyError, ValueError) as exc:
        raise DatasetError(f"unreadable dataset {path}: {exc}") from exc
    expected = geometry_hash(geom)
    if header.get("geometry_hash") != expected:
        raise DatasetError(
            f"dataset {path} was generated for geometry {header.get('geometry_hash')}, expected {expected}"
        )
    shape = tuple(int(n) for n in header["input_shape"])
    inputs = flat.reshape((flat.shape[0],) + shape)
    return TrainingSet(inputs, labels, train_index, val_index), DatasetConfig.model_validate(header["dataset"])
