from __future__ import annotations

import csv
import math
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import cairo

WIDTH = 640
HEIGHT = 420
MARGIN = 60
PALETTE = (
    (0.12, 0.47, 0.71),
    (0.84, 0.15, 0.16),
    (0.17, 0.63, 0.17),
    (0.58, 0.40, 0.74),
    (1.00, 0.50, 0.05),
    (0.55, 0.34, 0.29),
)


@dataclass
class Series:
    label: str
    xs: List[float]
    ys: List[float]


def read_csv_rows(path: Path) -> List[Dict[str, str]]:
    """Rows of an irslab CSV, skipping the leading provenance comment."""
    with path.open(encoding="utf-8") as handle:
        lines = [line for line in handle if not line.startswith("#")]
    return list(csv.DictReader(lines))


def _bounds(series: Sequence[Series]) -> Tuple[float, float, float, float]:
    xs = [x for s in series for x in s.xs if math.isfinite(x)]
    ys = [y for s in series for y in s.ys if math.isfinite(y)]
    if not xs or not ys:
        return 0.0, 1.0, 0.0, 1.0
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(0.0, min(ys)), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 1.0, x1 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    return x0, x1, y0, y1


def _draw_axes(ctx: cairo.Context, title: str, xlabel: str, ylabel: str, bounds: Tuple[float, float, float, float]) -> None:
    x0, x1, y0, y1 = bounds
    ctx.set_source_rgb(1, 1, 1)
    ctx.rectangle(0, 0, WIDTH, HEIGHT)
    ctx.fill()
    ctx.set_source_rgb(0, 0, 0)
    ctx.set_line_width(1.0)
    ctx.move_to(MARGIN, MARGIN)
    ctx.line_to(MARGIN, HEIGHT - MARGIN)
    ctx.line_to(WIDTH - MARGIN, HEIGHT - MARGIN)
    ctx.stroke()
    ctx.select_font_face("Sans", cairo.FONT_SLANT_NORMAL, cairo.FONT_WEIGHT_NORMAL)
    ctx.set_font_size(14)
    ctx.move_to(MARGIN, MARGIN / 2)
    ctx.show_text(title)
    ctx.set_font_size(11)
    ctx.move_to(WIDTH / 2 - 30, HEIGHT - 15)
    ctx.show_text(xlabel)
    ctx.move_to(8, MARGIN - 10)
    ctx.show_text(ylabel)
    for i in range(5):
        fx = i / 4
        ctx.move_to(MARGIN + fx * (WIDTH - 2 * MARGIN) - 10, HEIGHT - MARGIN + 15)
        ctx.show_text(f"{x0 + fx * (x1 - x0):.3g}")
        ctx.move_to(10, HEIGHT - MARGIN - fx * (HEIGHT - 2 * MARGIN) + 4)
        ctx.show_text(f"{y0 + fx * (y1 - y0):.3g}")


def _to_px(x: float, y: float, bounds: Tuple[float, float, float, float]) -> Tuple[float, float]:
    x0, x1, y0, y1 = bounds
    px = MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2 * MARGIN)
    py = HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2 * MARGIN)
    return px, py


def _legend(ctx: cairo.Context, labels: Sequence[str]) -> None:
    ctx.set_font_size(11)
    for i, label in enumerate(labels):
        r, g, b = PALETTE[i % len(PALETTE)]
        y = MARGIN + 14 * i
        ctx.set_source_rgb(r, g, b)
        ctx.rectangle(WIDTH - MARGIN - 150, y - 8, 10, 10)
        ctx.fill()
        ctx.set_source_rgb(0, 0, 0)
        ctx.move_to(WIDTH - MARGIN - 135, y + 1)
        ctx.show_text(label)


def line_plot(path: Path, title: str, xlabel: str, ylabel: str, series: Sequence[Series]) -> Path:
    bounds = _bounds(series)
    path.parent.mkdir(parents=True, exist_ok=True)
    surface = cairo.SVGSurface(str(path), WIDTH, HEIGHT)
    ctx = cairo.Context(surface)
    _draw_axes(ctx, title, xlabel, ylabel, bounds)
    ctx.set_line_width(2.0)
    for i, s in enumerate(series):
        ctx.set_source_rgb(*PALETTE[i % len(PALETTE)])
        points = [_to_px(x, y, bounds) for x, y in zip(s.xs, s.ys) if math.isfinite(x) and math.isfinite(y)]
        for j, (px, py) in enumerate(points):
            if j == 0:
                ctx.move_to(px, py)
            else:
                ctx.line_to(px, py)
        ctx.stroke()
        for px, py in points:
            ctx.arc(px, py, 3, 0, 2 * math.pi)
            ctx.fill()
    _legend(ctx, [s.label for s in series])
    surface.finish()
    return path


def scatter_plot(path: Path, title: str, series: Series) -> Path:
    bounds = _bounds([series, Series("ideal", [0.0, 90.0], [0.0, 90.0])])
    path.parent.mkdir(parents=True, exist_ok=True)
    surface = cairo.SVGSurface(str(path), WIDTH, HEIGHT)
    ctx = cairo.Context(surface)
    _draw_axes(ctx, title, "true theta (deg)", "predicted theta (deg)", bounds)
    ctx.set_source_rgb(0.5, 0.5, 0.5)
    ctx.set_dash([4.0, 4.0])
    ctx.move_to(*_to_px(bounds[0], bounds[0], bounds))
    ctx.line_to(*_to_px(bounds[1], bounds[1], bounds))
    ctx.stroke()
    ctx.set_dash([])
    ctx.set_source_rgb(*PALETTE[0])
    for x, y in zip(series.xs, series.ys):
        px, py = _to_px(x, y, bounds)
        ctx.arc(px, py, 2, 0, 2 * math.pi)
        ctx.fill()
    surface.finish()
    return path


def _grouped(rows: List[Dict[str, str]], key: str, x: str, y: str) -> List[Series]:
    groups: "OrderedDict[str, Series]" = OrderedDict()
    for row in rows:
        series = groups.setdefault(row[key], Series(row[key], [], []))
        series.xs.append(float(row[x]))
        series.ys.append(float(row[y]))
    return list(groups.values())


def render_plots(out_dir: Path) -> List[Path]:
    """SVG figures for whichever CSV outputs exist in ``out_dir``."""
    written: List[Path] = []
    snr = out_dir / "rmse_vs_snr.csv"
    if snr.exists():
        series = _grouped(read_csv_rows(snr), "method", "snr_db", "rmse_deg")
        written.append(line_plot(out_dir / "rmse_vs_snr.svg", "RMSE vs SNR", "SNR (dB)", "RMSE (deg)", series))
    snapshots = out_dir / "rmse_vs_snapshots.csv"
    if snapshots.exists():
        series = _grouped(read_csv_rows(snapshots), "method", "snapshots", "rmse_deg")
        written.append(
            line_plot(out_dir / "rmse_vs_snapshots.svg", "RMSE vs snapshots", "snapshots", "RMSE (deg)", series)
        )
    bound = out_dir / "crlb_vs_snr.csv"
    if bound.exists():
        series = _grouped(read_csv_rows(bound), "phase_source", "snr_db", "crlb_rmse_deg")
        written.append(
            line_plot(out_dir / "crlb_vs_snr.svg", "CRLB RMSE bound vs SNR", "SNR (dB)", "bound (deg)", series)
        )
    curve = out_dir / "learning_curve.csv"
    if curve.exists():
        rows = read_csv_rows(curve)
        series = [
            Series("train", [float(r["epoch"]) for r in rows], [float(r["train_loss"]) for r in rows]),
            Series("validation", [float(r["epoch"]) for r in rows], [float(r["val_loss"]) for r in rows]),
        ]
        written.append(line_plot(out_dir / "learning_curve.svg", "Learning curve", "epoch", "MSE", series))
    for scatter in sorted(out_dir.glob("scatter_*.csv")):
        rows = read_csv_rows(scatter)
        series = Series(
            scatter.stem, [float(r["true_theta"]) for r in rows], [float(r["pred_theta"]) for r in rows]
        )
        written.append(scatter_plot(scatter.with_suffix(".svg"), scatter.stem, series))
    return written
