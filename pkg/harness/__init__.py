from .cli import build_parser, main
from .config import (
    DESK_OVERRIDES,
    OUT_DIR_ENV,
    WORKERS_ENV,
    ConfigError,
    EvalConfig,
    ExperimentConfig,
    config_hash,
    load_config,
    output_dir,
    provenance,
    with_seed,
    worker_count,
)
from .experiments import (
    LEARNED_METHODS,
    CrlbRow,
    EvalReport,
    EvalRow,
    Scenario,
    ScatterRecords,
    export_scatter,
    initial_model,
    ml_trial,
    learned_trial,
    run_crlb_vs_snr,
    run_rmse_vs_snapshots,
    run_rmse_vs_snr,
    train_learned,
    trial_stream,
    write_crlb_csv,
    write_report_csv,
)
from .flops import FlopsEntry, FlopsReport, flops_report, write_flops_csv
from .metrics import MetricError, mean_abs_error, rmse
from .plots import render_plots

__all__ = [
    "DESK_OVERRIDES",
    "LEARNED_METHODS",
    "OUT_DIR_ENV",
    "WORKERS_ENV",
    "ConfigError",
    "CrlbRow",
    "EvalConfig",
    "EvalReport",
    "EvalRow",
    "ExperimentConfig",
    "FlopsEntry",
    "FlopsReport",
    "MetricError",
    "Scenario",
    "ScatterRecords",
    "build_parser",
    "config_hash",
    "export_scatter",
    "flops_report",
    "initial_model",
    "learned_trial",
    "load_config",
    "main",
    "mean_abs_error",
    "ml_trial",
    "output_dir",
    "provenance",
    "render_plots",
    "rmse",
    "run_crlb_vs_snr",
    "run_rmse_vs_snapshots",
    "run_rmse_vs_snr",
    "train_learned",
    "trial_stream",
    "with_seed",
    "worker_count",
    "write_crlb_csv",
    "write_flops_csv",
    "write_report_csv",
]
