from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from channel import ChannelModel, PhaseVector, composite_steering, noise_variance
from dataset import (
    add_awgn,
    generate_training_set,
    received_matrices,
    sample_angles,
    source_samples,
)
from geometry import DoA
from irs_end2end import (
    EndToEndModel,
    TrainingResult,
    export_phases,
    predict_doas,
    train_end_to_end,
)
from ml_estimator import SteeringCache, ml_grid_search
from phase_design import (
    crlb,
    optimize_phases_crlb,
    random_phases,
    snr_max_phases,
)

from .config import ExperimentConfig, worker_count
from .metrics import mean_abs_error, rmse

LEARNED_METHODS = ("learned-fc", "learned-fc-frozen")

# spawn-key tags keeping experiment streams apart
_SNR_SWEEP = 1
_SNAPSHOT_SWEEP = 2
_CRLB_SWEEP = 3
_MODEL_INIT = 4


@dataclass(frozen=True)
class EvalRow:
    method: str
    snr_db: float
    snapshots: int
    rmse_deg: float
    mae_theta_deg: float
    mae_phi_deg: float
    trials: int


@dataclass(frozen=True, eq=False)
class ScatterRecords:
    truths: np.ndarray
    estimates: np.ndarray


@dataclass
class EvalReport:
    rows: List[EvalRow] = field(default_factory=list)
    scatter: Dict[str, ScatterRecords] = field(default_factory=dict)
    failures: Dict[str, str] = field(default_factory=dict)

    def row(self, method: str, snr_db: float, snapshots: int) -> EvalRow:
        for row in self.rows:
            if row.method == method and row.snr_db == snr_db and row.snapshots == snapshots:
                return row
        raise KeyError((method, snr_db, snapshots))


class Scenario:
    """Channel, search grid and steering cache shared by every trial of one config."""

    def __init__(
        self,
        cfg: ExperimentConfig,
        use_cache: bool = True,
        channel: ChannelModel | None = None,
        cache: SteeringCache | None = None,
    ) -> None:
        self.cfg = cfg
        self.channel = channel or ChannelModel.from_geometry(cfg.geometry)
        if cache is None and use_cache:
            cache = SteeringCache(cfg.geometry, cfg.grid)
        self.cache = cache

    def with_config(self, cfg: ExperimentConfig) -> "Scenario":
        """Same channel and cache under a config that differs only outside geometry and grid."""
        return Scenario(cfg, channel=self.channel, cache=self.cache)

    def observe(
        self,
        phases: PhaseVector,
        truth: np.ndarray,
        snapshots: int,
        snr_db: float,
        rng: np.random.Generator,
    ) -> np.ndarray:
        """One received matrix (1, M^A, L) for a fresh source and noise draw."""
        source = source_samples(1, snapshots, rng, self.cfg.dataset.snapshot_rotation)
        clean = received_matrices(self.channel, phases, truth[None, :], source)
        reference = None if self.cfg.dataset.noise_reference == "signal" else self.channel.received_power
        return add_awgn(clean, snr_db, rng, reference)

    def search(self, y: np.ndarray, phases: PhaseVector) -> DoA:
        return ml_grid_search(y[0], self.channel, phases, self.cfg.grid, self.cache).doa

    def clip_for_crlb(self, doa: DoA) -> DoA:
        step = self.cfg.grid.step
        return DoA(float(np.clip(doa.theta, step, 90.0 - step)), doa.phi)

    def design(self, method: str, coarse: DoA, snr_db: float, rng: np.random.Generator) -> PhaseVector:
        if method == "ml-snr-max":
            return snr_max_phases(self.cfg.geometry, coarse)
        sigma_n2 = noise_variance(snr_db, self.channel.received_power, self.channel.m_a, self.cfg.dataset.snapshots)
        result = optimize_phases_crlb(
            self.channel,
            self.clip_for_crlb(coarse),
            sigma_s2=1.0,
            sigma_n2=sigma_n2 if sigma_n2 > 0 else 1.0,
            cfg=self.cfg.phase_design,
            initial=random_phases(self.channel.m_r, rng),
        )
        return result.phases


def trial_stream(seed: int, sweep: int, index: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(sweep, index, trial))


def _draw_truth(cfg: ExperimentConfig, rng: np.random.Generator) -> np.ndarray:
    return sample_angles(1, cfg.dataset, rng, continuous=not cfg.dataset.snap_test_to_grid)[0]


def _run_trials(cfg: ExperimentConfig, fn: Callable[[int], Tuple[np.ndarray, np.ndarray]]) -> ScatterRecords:
    trials = range(cfg.eval.trials)
    workers = worker_count(cfg)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(fn, trials))
    else:
        results = [fn(trial) for trial in trials]
    truths = np.array([r[0] for r in results], dtype=np.float64).reshape(-1, 2)
    estimates = np.array([r[1] for r in results], dtype=np.float64).reshape(-1, 2)
    return ScatterRecords(truths, estimates)


def ml_trial(
    scenario: Scenario,
    method: str,
    snr_db: float,
    snapshots: int,
    stream: np.random.SeedSequence,
) -> Tuple[np.ndarray, np.ndarray]:
    """Coarse search under random phases, phase design at the coarse DoA, then re-estimate."""
    rng = np.random.default_rng(stream)
    truth = _draw_truth(scenario.cfg, rng)
    initial = random_phases(scenario.channel.m_r, rng)
    coarse = scenario.search(scenario.observe(initial, truth, snapshots, snr_db, rng), initial)
    designed = scenario.design(method, coarse, snr_db, rng)
    estimate = scenario.search(scenario.observe(designed, truth, snapshots, snr_db, rng), designed)
    return truth, estimate.as_array()


def learned_trial(
    scenario: Scenario,
    model: EndToEndModel,
    snr_db: float,
    stream: np.random.SeedSequence,
) -> Tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(stream)
    truth = _draw_truth(scenario.cfg, rng)
    y = scenario.observe(export_phases(model), truth, model.snapshots, snr_db, rng)
    return truth, predict_doas(model, y)[0]


def initial_model(cfg: ExperimentConfig, snapshots: int, frozen: bool = False) -> EndToEndModel:
    """Seeded initialization shared by the trained-IRS and frozen-IRS variants."""
    return EndToEndModel.build(
        cfg.geometry,
        snapshots,
        rng=np.random.default_rng(trial_stream(cfg.seed, _MODEL_INIT, snapshots, 0)),
        train_irs=cfg.training.train_irs and not frozen,
    )


def train_learned(
    cfg: ExperimentConfig,
    snapshots: int,
    frozen: bool = False,
    verbose: bool = False,
) -> TrainingResult:
    dataset_cfg = cfg.dataset.model_copy(update={"snapshots": snapshots})
    data = generate_training_set(cfg.geometry, dataset_cfg)
    model = initial_model(cfg, snapshots, frozen)
    if verbose:
        print(f"[harness] training method={'learned-fc-frozen' if frozen else 'learned-fc'} snapshots={snapshots}")
    return train_end_to_end(model, data, cfg.training, verbose=verbose)


def _evaluate(
    scenario: Scenario,
    method: str,
    snr_db: float,
    snapshots: int,
    sweep: int,
    index: int,
    model: EndToEndModel | None,
) -> ScatterRecords:
    cfg = scenario.cfg
    if method in LEARNED_METHODS:
        assert model is not None
        return _run_trials(cfg, lambda t: learned_trial(scenario, model, snr_db, trial_stream(cfg.seed, sweep, index, t)))
    return _run_trials(
        cfg, lambda t: ml_trial(scenario, method, snr_db, snapshots, trial_stream(cfg.seed, sweep, index, t))
    )


def _row(method: str, snr_db: float, snapshots: int, records: ScatterRecords) -> EvalRow:
    mae_theta, mae_phi = mean_abs_error(records.estimates, records.truths)
    return EvalRow(
        method=method,
        snr_db=snr_db,
        snapshots=snapshots,
        rmse_deg=rmse(records.estimates, records.truths),
        mae_theta_deg=mae_theta,
        mae_phi_deg=mae_phi,
        trials=int(records.truths.shape[0]),
    )


def _model_for(
    cfg: ExperimentConfig,
    method: str,
    snapshots: int,
    models: Optional[Mapping[str, EndToEndModel]],
    verbose: bool,
) -> EndToEndModel:
    if models and method in models and models[method].snapshots == snapshots:
        return models[method]
    return train_learned(cfg, snapshots, frozen=method == "learned-fc-frozen", verbose=verbose).model


def run_rmse_vs_snr(
    cfg: ExperimentConfig,
    models: Optional[Mapping[str, EndToEndModel]] = None,
    scenario: Scenario | None = None,
    verbose: bool = False,
) -> EvalReport:
    """C trials per (method, SNR); a failing method is reported and the rest still run."""
    scenario = scenario or Scenario(cfg)
    snapshots = cfg.dataset.snapshots
    snr_values = [math.inf] if cfg.eval.noiseless else list(cfg.eval.snr_db)
    report = EvalReport()
    for method in cfg.eval.methods:
        try:
            model = _model_for(cfg, method, snapshots, models, verbose) if method in LEARNED_METHODS else None
            for index, snr_db in enumerate(snr_values):
                records = _evaluate(scenario, method, snr_db, snapshots, _SNR_SWEEP, index, model)
                report.rows.append(_row(method, snr_db, snapshots, records))
                if snr_db == cfg.eval.scatter_snr_db or (cfg.eval.noiseless and index == 0):
                    report.scatter[method] = records
                if verbose:
                    print(f"[harness] method={method} snr_db={snr_db:g} rmse_deg={report.rows[-1].rmse_deg:.4f}")
        except Exception as exc:
            report.failures[method] = f"{type(exc).__name__}: {exc}"
            print(f"[harness] WARN method={method} failed: {exc}")
    return report


def run_rmse_vs_snapshots(
    cfg: ExperimentConfig,
    scenario: Scenario | None = None,
    verbose: bool = False,
) -> EvalReport:
    """Sweep L at a fixed SNR; learned methods are retrained for every L."""
    scenario = scenario or Scenario(cfg)
    snr_db = math.inf if cfg.eval.noiseless else cfg.eval.snapshot_sweep_snr_db
    report = EvalReport()
    for method in cfg.eval.methods:
        try:
            for snapshots in cfg.eval.snapshot_sweep:
                sweep_cfg = cfg.model_copy(
                    update={"dataset": cfg.dataset.model_copy(update={"snapshots": snapshots})}
                )
                sweep_scenario = scenario.with_config(sweep_cfg)
                model = (
                    _model_for(sweep_cfg, method, snapshots, None, verbose)
                    if method in LEARNED_METHODS
                    else None
                )
                records = _evaluate(sweep_scenario, method, snr_db, snapshots, _SNAPSHOT_SWEEP, snapshots, model)
                report.rows.append(_row(method, snr_db, snapshots, records))
                if verbose:
                    print(f"[harness] method={method} snapshots={snapshots} rmse_deg={report.rows[-1].rmse_deg:.4f}")
        except Exception as exc:
            report.failures[method] = f"{type(exc).__name__}: {exc}"
            print(f"[harness] WARN method={method} failed: {exc}")
    return report


@dataclass(frozen=True)
class CrlbRow:
    phase_source: str
    snr_db: float
    crlb_rmse_deg: float
    trials: int


def run_crlb_vs_snr(
    cfg: ExperimentConfig,
    sources: Iterable[str] | None = None,
    learned: EndToEndModel | None = None,
) -> List[CrlbRow]:
    """CRLB-derived RMSE bound at the true DoA, averaged over random interior DoAs.

    The noise variance follows the simulated observations: sigma_n^2 equals
    ||a_r||^2 / (M^A SNR) for a unit-power source, so the bound is comparable
    with the measured RMSE curves.
    """
    scenario = Scenario(cfg, use_cache=False)
    channel = scenario.channel
    names = list(sources or cfg.eval.crlb_sources)
    if learned is not None:
        names.append("learned")
    totals: Dict[str, List[float]] = {name: [] for name in names}
    for trial in range(cfg.eval.crlb_trials):
        rng = np.random.default_rng(trial_stream(cfg.seed, _CRLB_SWEEP, 0, trial))
        truth = scenario.clip_for_crlb(DoA(*_draw_truth(cfg, rng)))
        for name in names:
            if name == "random":
                phases = random_phases(channel.m_r, rng)
            elif name == "snr-max":
                phases = snr_max_phases(cfg.geometry, truth)
            elif name == "crlb-min":
                phases = optimize_phases_crlb(
                    channel, truth, 1.0, 1.0, cfg.phase_design, initial=random_phases(channel.m_r, rng)
                ).phases
            elif name == "learned":
                phases = export_phases(learned)  # type: ignore[arg-type]
            else:
                raise ValueError(f"unknown phase source: {name}")
            a_norm = float(np.sum(np.abs(composite_steering(channel, phases, truth)) ** 2))
            # bound at 0 dB; scaled per SNR below
            value = crlb(channel, phases, truth, 1.0, a_norm / channel.m_a)
            totals[name].append(value.total)
    rows: List[CrlbRow] = []
    for name in names:
        mean_total = float(np.mean(totals[name]))
        for snr_db in cfg.eval.snr_db:
            scaled = mean_total / 10.0 ** (snr_db / 10.0)
            rows.append(CrlbRow(name, snr_db, math.degrees(math.sqrt(0.5 * scaled)), cfg.eval.crlb_trials))
    return rows


def _writer(path: Path, header_comment: str | None):
    path.parent.mkdir(parents=True, exist_ok=True)
    handle = path.open("w", newline="", encoding="utf-8")
    if header_comment:
        handle.write(f"# {header_comment}\n")
    return handle, csv.writer(handle, lineterminator="\n")


def _fmt(value: float) -> str:
    return f"{value:.10g}"


def write_report_csv(report: EvalReport, path: Path, header_comment: str | None = None) -> Path:
    handle, writer = _writer(path, header_comment)
    with handle:
        writer.writerow(["method", "snr_db", "snapshots", "rmse_deg", "mae_theta_deg", "mae_phi_deg", "trials"])
        for row in report.rows:
            writer.writerow(
                [
                    row.method,
                    _fmt(row.snr_db),
                    row.snapshots,
                    _fmt(row.rmse_deg),
                    _fmt(row.mae_theta_deg),
                    _fmt(row.mae_phi_deg),
                    row.trials,
                ]
            )
    return path


def write_crlb_csv(rows: List[CrlbRow], path: Path, header_comment: str | None = None) -> Path:
    handle, writer = _writer(path, header_comment)
    with handle:
        writer.writerow(["phase_source", "snr_db", "crlb_rmse_deg", "trials"])
        for row in rows:
            writer.writerow([row.phase_source, _fmt(row.snr_db), _fmt(row.crlb_rmse_deg), row.trials])
    return path


def export_scatter(report: EvalReport, out_dir: Path, header_comment: str | None = None) -> List[Path]:
    """Per method: scatter_<method>.csv (true, predicted, |error| for theta) and abs_error_<method>.csv."""
    written: List[Path] = []
    for method, records in report.scatter.items():
        order = np.argsort(records.truths[:, 0], kind="stable")
        truths = records.truths[order]
        estimates = records.estimates[order]
        errors = np.abs(estimates - truths)
        scatter_path = out_dir / f"scatter_{method}.csv"
        handle, writer = _writer(scatter_path, header_comment)
        with handle:
            writer.writerow(["true_theta", "pred_theta", "abs_error"])
            for true, pred, err in zip(truths[:, 0], estimates[:, 0], errors[:, 0]):
                writer.writerow([_fmt(true), _fmt(pred), _fmt(err)])
        error_path = out_dir / f"abs_error_{method}.csv"
        handle, writer = _writer(error_path, header_comment)
        with handle:
            writer.writerow(["true_theta", "abs_error_theta", "true_phi", "abs_error_phi"])
            for true, err in zip(truths, errors):
                writer.writerow([_fmt(true[0]), _fmt(err[0]), _fmt(true[1]), _fmt(err[1])])
        written.extend([scatter_path, error_path])
    return written
