from __future__ import annotations

import csv
import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from channel import ChannelModel, PhaseVector
from geometry import DoA, SceneGeometry, rt_path_table

from .grid import SearchGrid

ROW_CHUNK = 16


class MlSearchError(ValueError):
    pass


def ml_objective(y: np.ndarray, a: np.ndarray) -> float:
    """||Y^H a||^2 / (a^H a): the largest eigenvalue of the 1x1 ML criterion."""
    a = np.asarray(a, dtype=np.complex128).reshape(-1)
    y = np.asarray(y, dtype=np.complex128)
    if y.ndim != 2 or y.shape[0] != a.size:
        raise MlSearchError(f"Y must have shape ({a.size}, L), got {y.shape}")
    norm = float(np.real(np.vdot(a, a)))
    if norm <= 0.0:
        raise MlSearchError("steering vector must be nonzero")
    proj = np.conj(a) @ y
    return float(np.sum(np.abs(proj) ** 2) / norm)


def _batch_objective(y: np.ndarray, table: np.ndarray) -> np.ndarray:
    """Objective for stacked steering vectors ``table`` of shape (..., M^A)."""
    flat = table.reshape(-1, table.shape[-1])
    proj = np.conj(flat) @ y
    num = np.sum(np.abs(proj) ** 2, axis=1)
    den = np.sum(np.abs(flat) ** 2, axis=1)
    values = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    return values.reshape(table.shape[:-1])


def _rt_rows(geom: SceneGeometry, thetas: np.ndarray, phis: np.ndarray) -> np.ndarray:
    theta_mesh, phi_mesh = np.meshgrid(thetas, phis, indexing="ij")
    return np.exp(1j * 2.0 * math.pi * rt_path_table(geom, theta_mesh, phi_mesh) / geom.wavelength)


class SteeringCache:
    """a^RT over a whole grid, shape (G_theta, G_phi, M^R).

    Composite tables for given phases are one matrix product away; the most
    recent one is kept so repeated searches under fixed phases reuse it.
    """

    def __init__(self, geom: SceneGeometry, grid: SearchGrid) -> None:
        self.geometry = geom
        self.grid = grid
        self.rt_table = _rt_rows(geom, grid.thetas(), grid.phis())
        self._last_channel: Optional[ChannelModel] = None
        self._last_phases: bytes = b""
        self._last_table: Optional[np.ndarray] = None
        self._lock = threading.Lock()

    @property
    def nbytes(self) -> int:
        return int(self.rt_table.nbytes)

    def composite_table(self, channel: ChannelModel, phases: PhaseVector) -> np.ndarray:
        if channel.m_r != self.rt_table.shape[-1]:
            raise MlSearchError("channel does not match the cached geometry")
        key = phases.phases.tobytes()
        with self._lock:
            if channel is self._last_channel and key == self._last_phases:
                return self._last_table  # type: ignore[return-value]
        table = (self.rt_table * phases.omega) @ channel.gain.T
        with self._lock:
            self._last_channel = channel
            self._last_phases = key
            self._last_table = table
        return table


@dataclass(frozen=True, eq=False)
class MlResult:
    doa: DoA
    objective: float
    index: tuple[int, int]
    surface: Optional[np.ndarray] = None


def ml_grid_search(
    y: np.ndarray,
    channel: ChannelModel,
    phases: PhaseVector,
    grid: SearchGrid,
    cache: SteeringCache | None = None,
    keep_surface: bool = False,
) -> MlResult:
    """Exhaustive ML search; ties resolve to the lowest (theta, phi) index.

    At theta = 90 degrees every phi gives the same steering vector, so a zenith
    maximum always reports phi index 0 (``grid.phi_min``).
    """
    y = np.asarray(y, dtype=np.complex128)
    if y.ndim != 2 or y.shape[0] != channel.m_a:
        raise MlSearchError(f"Y must have shape ({channel.m_a}, L), got {y.shape}")
    if phases.size != channel.m_r:
        raise MlSearchError(f"expected {channel.m_r} IRS phases, got {phases.size}")

    if cache is not None:
        if cache.grid != grid:
            raise MlSearchError("steering cache was built for a different grid")
        surface = _batch_objective(y, cache.composite_table(channel, phases))
    else:
        thetas = grid.thetas()
        phis = grid.phis()
        surface = np.empty((thetas.size, phis.size), dtype=np.float64)
        for start in range(0, thetas.size, ROW_CHUNK):
            rows = thetas[start : start + ROW_CHUNK]
            composite = (_rt_rows(channel.geometry, rows, phis) * phases.omega) @ channel.gain.T
            surface[start : start + rows.size] = _batch_objective(y, composite)

    if not np.all(np.isfinite(surface)):
        raise MlSearchError("ML objective surface contains non-finite values")
    if grid.thetas()[-1] == 90.0:
        # identical rows may still differ in the last bit after the matrix product
        surface[-1, :] = surface[-1, 0]
    flat_index = int(np.argmax(surface))
    i_theta, i_phi = np.unravel_index(flat_index, surface.shape)
    return MlResult(
        doa=grid.point(int(i_theta), int(i_phi)),
        objective=float(surface[i_theta, i_phi]),
        index=(int(i_theta), int(i_phi)),
        surface=surface if keep_surface else None,
    )


def write_surface_csv(result: MlResult, grid: SearchGrid, path: Path, header_comment: str | None = None) -> Path:
    if result.surface is None:
        raise MlSearchError("search was run without keep_surface=True")
    path.parent.mkdir(parents=True, exist_ok=True)
    thetas = grid.thetas()
    phis = grid.phis()
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        if header_comment:
            handle.write(f"# {header_comment}\n")
        writer.writerow(["theta", "phi", "objective"])
        for i, theta in enumerate(thetas):
            for j, phi in enumerate(phis):
                writer.writerow([f"{theta:.10g}", f"{phi:.10g}", f"{result.surface[i, j]:.10g}"])
    return path
