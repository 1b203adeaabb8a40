from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from dataset import DatasetConfig
from geometry import SceneGeometry
from irs_end2end import TrainingConfig
from ml_estimator import SearchGrid
from phase_design import ManifoldOptimizerConfig

Method = Literal["ml-snr-max", "ml-crlb-min", "learned-fc", "learned-fc-frozen"]
PhaseSource = Literal["random", "snr-max", "crlb-min"]

OUT_DIR_ENV = "IRSLAB_OUT_DIR"
WORKERS_ENV = "IRSLAB_WORKERS"

# laptop-scale preset selected by --desk
DESK_OVERRIDES: Dict[str, Dict[str, Any]] = {
    "eval": {"trials": 100},
    "dataset": {"n_train": 5_000, "n_test": 100},
    "training": {"epochs": 20, "learning_rate": 0.003},
}


class ConfigError(Exception):
    pass


class EvalConfig(BaseModel):
    methods: List[Method] = Field(default_factory=lambda: ["ml-snr-max", "ml-crlb-min", "learned-fc"])
    snr_db: List[float] = Field(default_factory=lambda: [-20.0, -10.0, 0.0, 10.0, 20.0])
    snapshot_sweep: List[int] = Field(default_factory=lambda: list(range(1, 11)))
    snapshot_sweep_snr_db: float = 0.0
    trials: int = 1_000
    scatter_snr_db: float = 0.0
    noiseless: bool = False
    crlb_trials: int = 50
    crlb_sources: List[PhaseSource] = Field(default_factory=lambda: ["random", "snr-max", "crlb-min"])
    workers: int = 1
    out_dir: str = "out"

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def _validate_eval(self) -> "EvalConfig":
        if not self.methods:
            raise ValueError("eval.methods must name at least one method")
        if len(set(self.methods)) != len(self.methods):
            raise ValueError("eval.methods must not repeat a method")
        if self.trials < 1:
            raise ValueError("eval.trials must be >= 1")
        if self.crlb_trials < 1:
            raise ValueError("eval.crlb_trials must be >= 1")
        if not self.snr_db:
            raise ValueError("eval.snr_db must not be empty")
        if any(count < 1 for count in self.snapshot_sweep):
            raise ValueError("eval.snapshot_sweep entries must be >= 1")
        if self.workers < 1:
            raise ValueError("eval.workers must be >= 1")
        return self


class ExperimentConfig(BaseModel):
    seed: int = 0
    geometry: SceneGeometry = Field(default_factory=SceneGeometry)
    dataset: DatasetConfig = Field(default_factory=DatasetConfig)
    training: TrainingConfig = Field(default_factory=TrainingConfig)
    grid: SearchGrid = Field(default_factory=SearchGrid)
    phase_design: ManifoldOptimizerConfig = Field(default_factory=ManifoldOptimizerConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)

    model_config = ConfigDict(extra="forbid")


def _load_data(path: Path) -> Dict[str, Any]:
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    if path.suffix.lower() in {".yaml", ".yml"}:
        import yaml

        try:
            payload = yaml.safe_load(path.read_text())
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    elif path.suffix.lower() == ".json":
        try:
            payload = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    else:
        raise ConfigError(f"Unsupported config format: {path.suffix}")
    if payload is None:
        return {}
    if not isinstance(payload, dict):
        raise ConfigError(f"config {path} must hold a mapping at the top level")
    return payload


def _merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def with_seed(cfg: ExperimentConfig, seed: int) -> ExperimentConfig:
    """Propagate the top-level seed into every section that draws randomness."""
    return cfg.model_copy(
        update={
            "seed": seed,
            "dataset": cfg.dataset.model_copy(update={"seed": seed}),
            "training": cfg.training.model_copy(update={"seed": seed}),
            "phase_design": cfg.phase_design.model_copy(update={"seed": seed}),
        }
    )


def load_config(
    path: str | Path | None = None,
    desk: bool = False,
    seed: Optional[int] = None,
) -> ExperimentConfig:
    payload: Dict[str, Any] = {} if path is None else _load_data(Path(path))
    if desk:
        payload = _merge(payload, DESK_OVERRIDES)
    try:
        cfg = ExperimentConfig.model_validate(payload)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
    return with_seed(cfg, cfg.seed if seed is None else seed)


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(cfg.model_dump_json().encode("utf-8")).hexdigest()[:16]


def provenance(cfg: ExperimentConfig) -> str:
    return f"seed={cfg.seed} config_hash={config_hash(cfg)}"


def output_dir(cfg: ExperimentConfig) -> Path:
    return Path(os.getenv(OUT_DIR_ENV, "").strip() or cfg.eval.out_dir)


def worker_count(cfg: ExperimentConfig) -> int:
    raw = os.getenv(WORKERS_ENV, "").strip()
    if not raw:
        return cfg.eval.workers
    try:
        value = int(raw)
    except ValueError:
        return cfg.eval.workers
    return value if value >= 1 else cfg.eval.workers
