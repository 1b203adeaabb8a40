from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

from irs_end2end import EndToEndModel
from neural_core import fc_regressor, parameter_count

from .config import ExperimentConfig

INFERENCE_BATCH = 64
REAL_FLOPS_PER_COMPLEX_MAC = 8
REFERENCE_FC_PARAMS = 49_253

# CNN: five Conv1D layers then Dense(32), Dense(2)
CNN_CONV = ((50, 24, 3, 10), (48, 64, 3, 24), (46, 96, 3, 64), (44, 64, 3, 96), (42, 24, 3, 64))
CNN_DENSE = ((24, 32), (32, 2))
# GRU+Conv1D hybrid: (T, U, I) per GRU, (D, F, K, C_in) per Conv1D, (D, N) per Dense
HYBRID_GRU = ((10, 64, 50), (10, 32, 64))
HYBRID_CONV = ((50, 64, 5, 10), (46, 32, 3, 64))
HYBRID_DENSE = ((64, 64), (64, 32), (32, 2))


@dataclass(frozen=True)
class FlopsEntry:
    method: str
    flops: float
    formula: str


@dataclass
class FlopsReport:
    entries: List[FlopsEntry] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def by_method(self) -> Dict[str, FlopsEntry]:
        return {entry.method: entry for entry in self.entries}

    def as_dict(self) -> Dict[str, object]:
        return {
            "entries": [
                {"method": e.method, "flops": e.flops, "formula": e.formula} for e in self.entries
            ],
            "notes": list(self.notes),
        }


def dense_flops(layers: Sequence[Tuple[int, int]]) -> int:
    return sum(2 * d * n for d, n in layers)


def conv_flops(layers: Sequence[Tuple[int, int, int, int]]) -> int:
    return sum(2 * d * f * k * c for d, f, k, c in layers)


def gru_flops(layers: Sequence[Tuple[int, int, int]]) -> int:
    return sum(2 * t * u * (3 * u + i) for t, u, i in layers)


def ml_flops(m_a: int, m_r: int, l: int, g_theta: int, g_phi: int, design: int) -> int:
    """Complex MACs of covariance, grid search and phase design, at 8 real FLOPs each."""
    macs = m_a**2 * l + g_theta * g_phi * (m_a**2 + m_a * m_r) + design * m_a * m_r
    return REAL_FLOPS_PER_COMPLEX_MAC * macs


def fc_layer_sizes(n_inputs: int) -> List[Tuple[int, int]]:
    widths = [n_inputs, 86, 48, 32, 2]
    return list(zip(widths[:-1], widths[1:]))


def flops_report(cfg: ExperimentConfig | None = None, verbose: bool = False) -> FlopsReport:
    cfg = cfg or ExperimentConfig()
    m_a = cfg.geometry.m_a
    m_r = cfg.geometry.m_r
    l = cfg.dataset.snapshots
    g_theta = cfg.grid.g_theta
    g_phi = cfg.grid.g_phi
    iterations = cfg.phase_design.max_iterations
    report = FlopsReport()
    report.entries.append(
        FlopsEntry(
            "ml-crlb-min",
            float(ml_flops(m_a, m_r, l, g_theta, g_phi, iterations)),
            "8*(M_A^2 L + G_theta G_phi (M_A^2 + M_A M_R) + I M_A M_R)",
        )
    )
    report.entries.append(
        FlopsEntry(
            "ml-snr-max",
            float(ml_flops(m_a, m_r, l, g_theta, g_phi, 1)),
            "8*(M_A^2 L + G_theta G_phi (M_A^2 + M_A M_R) + M_A M_R)",
        )
    )
    fc = dense_flops(fc_layer_sizes(l * 2 * m_a))
    report.entries.append(FlopsEntry("fc", fc / INFERENCE_BATCH, "sum_i 2 D_i N_i / 64"))
    cnn = conv_flops(CNN_CONV) + dense_flops(CNN_DENSE)
    report.entries.append(
        FlopsEntry("cnn", cnn / INFERENCE_BATCH, "(sum_j 2 D_j F_j K_j C_j + sum_i 2 D_i N_i) / 64")
    )
    hybrid = gru_flops(HYBRID_GRU) + conv_flops(HYBRID_CONV) + dense_flops(HYBRID_DENSE)
    report.entries.append(
        FlopsEntry(
            "proposed",
            hybrid / INFERENCE_BATCH,
            "(sum_k 2 T_k U_k (3 U_k + I_k) + sum_j 2 D_j F_j K_j C_j + sum_i 2 D_i N_i) / 64",
        )
    )

    count = parameter_count(fc_regressor((l, 2 * m_a), rng=0))
    end_to_end = parameter_count(EndToEndModel.build(cfg.geometry, l, rng=0))
    report.notes.append(
        f"fc_params={count} end_to_end_params={end_to_end} "
        f"reference_fc_params={REFERENCE_FC_PARAMS} gap={REFERENCE_FC_PARAMS - count}"
    )
    if verbose:
        for entry in report.entries:
            print(f"[flops] method={entry.method} flops={entry.flops:.4g}")
    print(f"[params] NOTE {report.notes[-1]}")
    return report


def write_flops_csv(report: FlopsReport, path: Path, header_comment: str | None = None) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        if header_comment:
            handle.write(f"# {header_comment}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["method", "flops_per_sample", "formula"])
        for entry in report.entries:
            writer.writerow([entry.method, f"{entry.flops:.10g}", entry.formula])
    return path
