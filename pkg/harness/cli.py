from __future__ import annotations

import argparse
import math
from pathlib import Path
from typing import Dict, Optional, Sequence

import numpy as np

from channel import ChannelError, ChannelModel, PhaseVector, noise_variance
from dataset import DatasetError, generate_training_set, load_dataset, save_dataset
from geometry import DoA, GeometryError
from irs_end2end import (
    EndToEndModel,
    TrainingError,
    export_phases,
    load_model,
    phases_sidecar,
    predict_doa,
    read_phases,
    save_model,
    train_end_to_end,
    write_learning_curve,
    write_phases,
)
from ml_estimator import MlSearchError, ml_grid_search, write_surface_csv
from neural_core import NetworkError
from phase_design import (
    PhaseDesignError,
    crlb,
    crlb_rmse_deg,
    optimize_phases_crlb,
    random_phases,
    snr_max_phases,
    write_trace_csv,
)

from .config import ConfigError, ExperimentConfig, config_hash, load_config, output_dir, provenance
from .experiments import (
    Scenario,
    export_scatter,
    initial_model,
    run_crlb_vs_snr,
    run_rmse_vs_snapshots,
    run_rmse_vs_snr,
    write_crlb_csv,
    write_report_csv,
)
from .flops import flops_report, write_flops_csv
from .metrics import MetricError
from .plots import render_plots

PACKAGE_ERRORS = (
    ConfigError,
    GeometryError,
    ChannelError,
    PhaseDesignError,
    MlSearchError,
    NetworkError,
    TrainingError,
    DatasetError,
    MetricError,
)

MODEL_FILE = "model.irsm"
DATASET_FILE = "dataset.npz"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="irslab", description="IRS-assisted DoA estimation toolkit")
    parser.add_argument("--config", help="Path to experiment YAML/JSON")
    parser.add_argument("--seed", type=int, help="Override the top-level seed")
    parser.add_argument("--out-dir", help="Output directory (overrides IRSLAB_OUT_DIR and eval.out_dir)")
    parser.add_argument("--desk", action="store_true", help="Laptop-scale preset")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data", help="Generate and store the training set")
    gen.add_argument("--out", help=f"Dataset path (default <out-dir>/{DATASET_FILE})")

    train = sub.add_parser("train", help="Train the end-to-end IRS + regressor model")
    train.add_argument("--epochs", type=int)
    train.add_argument("--frozen-irs", action="store_true", help="Keep the random IRS phases fixed")
    train.add_argument("--data", help="Stored dataset to train on instead of generating one")
    train.add_argument("--model", help=f"Artifact path (default <out-dir>/{MODEL_FILE})")

    design = sub.add_parser("design-phases", help="Design IRS phases for a coarse DoA")
    design.add_argument("method", choices=["snr-max", "crlb-min"])
    design.add_argument("--theta", type=float, required=True)
    design.add_argument("--phi", type=float, required=True)
    design.add_argument("--snr-db", type=float, help="SNR setting the CRLB noise variance (default unit variance)")

    estimate = sub.add_parser("estimate", help="Simulate one observation and estimate its DoA")
    estimate.add_argument("method", choices=["ml", "learned"])
    estimate.add_argument("--theta", type=float, required=True)
    estimate.add_argument("--phi", type=float, required=True)
    estimate.add_argument("--snr-db", type=float, default=0.0)
    estimate.add_argument("--phases", help="Phase export used by the ML estimator (default random)")
    estimate.add_argument("--model", help=f"Trained artifact (default <out-dir>/{MODEL_FILE})")
    estimate.add_argument("--surface", action="store_true", help="Write the ML objective surface CSV")

    evaluate = sub.add_parser("eval", help="Monte Carlo evaluation")
    evaluate.add_argument("experiment", choices=["rmse-vs-snr", "rmse-vs-snapshots", "scatter"])
    evaluate.add_argument("--methods", nargs="+")
    evaluate.add_argument("--trials", type=int)
    evaluate.add_argument("--model", help="Reuse a trained artifact for learned-fc")

    sub.add_parser("flops", help="Per-sample FLOPs of every method")

    bound = sub.add_parser("crlb", help="CRLB-derived RMSE bound per SNR")
    bound.add_argument("--model", help="Include the phases of a trained artifact")

    sub.add_parser("plot", help="Render SVG figures from the CSV outputs")
    return parser


def _config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_config(args.config, desk=args.desk, seed=args.seed)
    overrides: Dict[str, object] = {}
    if getattr(args, "methods", None):
        overrides["methods"] = args.methods
    if getattr(args, "trials", None) is not None:
        overrides["trials"] = args.trials
    if overrides:
        payload = cfg.model_dump()
        payload["eval"].update(overrides)
        try:
            cfg = ExperimentConfig.model_validate(payload)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if getattr(args, "epochs", None) is not None:
        if args.epochs < 0:
            raise ConfigError("--epochs must be >= 0")
        cfg = cfg.model_copy(update={"training": cfg.training.model_copy(update={"epochs": args.epochs})})
    return cfg


def _out_dir(args: argparse.Namespace, cfg: ExperimentConfig) -> Path:
    return Path(args.out_dir) if args.out_dir else output_dir(cfg)


def _model_path(args: argparse.Namespace, out: Path) -> Path:
    return Path(args.model) if getattr(args, "model", None) else out / MODEL_FILE


def _gen_data(args: argparse.Namespace, cfg: ExperimentConfig, out: Path) -> int:
    data = generate_training_set(cfg.geometry, cfg.dataset)
    target = Path(args.out) if args.out else out / DATASET_FILE
    path = save_dataset(target, data, cfg.geometry, cfg.dataset, config_hash(cfg))
    print(f"[irslab] dataset examples={data.labels.shape[0]} path={path}")
    return 0


def _train(args: argparse.Namespace, cfg: ExperimentConfig, out: Path) -> int:
    if args.data:
        data, stored = load_dataset(Path(args.data), cfg.geometry)
        snapshots = stored.snapshots
    else:
        data = generate_training_set(cfg.geometry, cfg.dataset)
        snapshots = cfg.dataset.snapshots
    model = initial_model(cfg, snapshots, frozen=args.frozen_irs)
    result = train_end_to_end(model, data, cfg.training, verbose=args.verbose)
    path = save_model(_model_path(args, out), result.model, {"seed": cfg.seed, "config_hash": config_hash(cfg)})
    write_learning_curve(out / "learning_curve.csv", result.curve, provenance(cfg))
    print(f"[irslab] model={path} phases={phases_sidecar(path)} epochs={len(result.curve)}")
    return 0


def _design(args: argparse.Namespace, cfg: ExperimentConfig, out: Path) -> int:
    channel = ChannelModel.from_geometry(cfg.geometry)
    doa = DoA(args.theta, args.phi)
    if args.snr_db is None:
        sigma_n2 = 1.0
    else:
        sigma_n2 = noise_variance(args.snr_db, 1.0, channel.m_a, cfg.dataset.snapshots) or 1.0
    if args.method == "snr-max":
        phases = snr_max_phases(cfg.geometry, doa)
    else:
        result = optimize_phases_crlb(
            channel,
            doa,
            sigma_s2=1.0,
            sigma_n2=sigma_n2,
            cfg=cfg.phase_design,
            initial=random_phases(channel.m_r, np.random.default_rng(cfg.seed)),
            verbose=args.verbose,
        )
        phases = result.phases
        write_trace_csv(result.trace, out / "trace_crlb-min.csv", provenance(cfg))
        print(f"[irslab] iterations={result.iterations} stop_reason={result.stop_reason}")
    path = write_phases(out / f"phases_{args.method}.txt", phases)
    bound = crlb_rmse_deg(crlb(channel, phases, doa, 1.0, sigma_n2))
    print(f"[irslab] phases={path} crlb_rmse_deg={bound:.6g}")
    return 0


def _estimate(args: argparse.Namespace, cfg: ExperimentConfig, out: Path) -> int:
    scenario = Scenario(cfg, use_cache=False)
    rng = np.random.default_rng(cfg.seed)
    truth = DoA(args.theta, args.phi).as_array()
    if args.method == "learned":
        model = load_model(_model_path(args, out), cfg.geometry)
        y = scenario.observe(export_phases(model), truth, model.snapshots, args.snr_db, rng)
        doa = predict_doa(model, y[0])
    else:
        phases = read_phases(Path(args.phases)) if args.phases else random_phases(scenario.channel.m_r, rng)
        if phases.size != scenario.channel.m_r:
            raise ChannelError(f"expected {scenario.channel.m_r} IRS phases, got {phases.size}")
        y = scenario.observe(phases, truth, cfg.dataset.snapshots, args.snr_db, rng)
        result = ml_grid_search(y[0], scenario.channel, phases, cfg.grid, keep_surface=args.surface)
        doa = result.doa
        if args.surface:
            write_surface_csv(result, cfg.grid, out / "surface.csv", provenance(cfg))
    print(f"[irslab] estimate theta={doa.theta:.6g} phi={doa.phi:.6g}")
    return 0


def _learned_models(args: argparse.Namespace, cfg: ExperimentConfig) -> Optional[Dict[str, EndToEndModel]]:
    if not args.model:
        return None
    return {"learned-fc": load_model(Path(args.model), cfg.geometry)}


def _eval(args: argparse.Namespace, cfg: ExperimentConfig, out: Path) -> int:
    header = provenance(cfg)
    if args.experiment == "rmse-vs-snapshots":
        report = run_rmse_vs_snapshots(cfg, verbose=args.verbose)
        path = write_report_csv(report, out / "rmse_vs_snapshots.csv", header)
        written = [path]
    elif args.experiment == "scatter":
        scatter_cfg = cfg.model_copy(
            update={"eval": cfg.eval.model_copy(update={"snr_db": [cfg.eval.scatter_snr_db]})}
        )
        report = run_rmse_vs_snr(scatter_cfg, _learned_models(args, cfg), verbose=args.verbose)
        written = export_scatter(report, out, header)
    else:
        report = run_rmse_vs_snr(cfg, _learned_models(args, cfg), verbose=args.verbose)
        written = [write_report_csv(report, out / "rmse_vs_snr.csv", header)]
    for path in written:
        print(f"[irslab] wrote {path}")
    if report.failures:
        for method, reason in report.failures.items():
            print(f"[irslab] WARN method={method} {reason}")
        return 1
    return 0


def _flops(args: argparse.Namespace, cfg: ExperimentConfig, out: Path) -> int:
    report = flops_report(cfg, verbose=args.verbose)
    for entry in report.entries:
        print(f"{entry.method:12s} {entry.flops:.4g}")
    path = write_flops_csv(report, out / "flops.csv", provenance(cfg))
    print(f"[irslab] wrote {path}")
    return 0


def _crlb(args: argparse.Namespace, cfg: ExperimentConfig, out: Path) -> int:
    learned = load_model(Path(args.model), cfg.geometry) if args.model else None
    rows = run_crlb_vs_snr(cfg, learned=learned)
    path = write_crlb_csv(rows, out / "crlb_vs_snr.csv", provenance(cfg))
    finite = [row.crlb_rmse_deg for row in rows if math.isfinite(row.crlb_rmse_deg)]
    if len(finite) < len(rows):
        print(f"[irslab] WARN {len(rows) - len(finite)} bound rows are infinite")
    print(f"[irslab] wrote {path}")
    return 0


def _plot(args: argparse.Namespace, cfg: ExperimentConfig, out: Path) -> int:
    written = render_plots(out)
    if not written:
        print(f"[irslab] WARN no CSV outputs found in {out}")
    for path in written:
        print(f"[irslab] wrote {path}")
    return 0


COMMANDS = {
    "gen-data": _gen_data,
    "train": _train,
    "design-phases": _design,
    "estimate": _estimate,
    "eval": _eval,
    "flops": _flops,
    "crlb": _crlb,
    "plot": _plot,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        out = _out_dir(args, cfg)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args, cfg, out)
    except PACKAGE_ERRORS as exc:
        raise SystemExit(f"[irslab] {type(exc).__name__}: {exc}") from exc
