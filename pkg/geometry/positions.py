from __future__ import annotations

import numpy as np

from .schema import DoA, GeometryError, SceneGeometry


def upa_positions(geom: SceneGeometry) -> np.ndarray:
    """Array element positions, shape (M^A, 3); row m = i_z * M^A_y + i_y."""
    i_z, i_y = np.meshgrid(np.arange(geom.m_a_z), np.arange(geom.m_a_y), indexing="ij")
    offsets = np.zeros((geom.m_a, 3), dtype=np.float64)
    offsets[:, 1] = i_y.ravel() * geom.d_a_y
    offsets[:, 2] = i_z.ravel() * geom.d_a_z
    return np.asarray(geom.array_offset, dtype=np.float64) + offsets


def irs_positions(geom: SceneGeometry) -> np.ndarray:
    """IRS cell positions, shape (M^R, 3); row n = i_y * M^R_x + i_x."""
    i_y, i_x = np.meshgrid(np.arange(geom.m_r_y), np.arange(geom.m_r_x), indexing="ij")
    offsets = np.zeros((geom.m_r, 3), dtype=np.float64)
    offsets[:, 0] = i_x.ravel() * geom.d_r_x
    offsets[:, 1] = i_y.ravel() * geom.d_r_y
    return np.asarray(geom.irs_offset, dtype=np.float64) + offsets


def pairwise_distances(geom: SceneGeometry) -> np.ndarray:
    diff = upa_positions(geom)[:, None, :] - irs_positions(geom)[None, :, :]
    distances = np.linalg.norm(diff, axis=-1)
    if np.any(distances <= 0.0):
        m, n = np.argwhere(distances <= 0.0)[0]
        raise GeometryError(f"array element {m + 1} coincides with IRS cell {n + 1}")
    return distances


# cos(radians(90)) is 6e-17, not 0; the zenith must give exactly zero path difference
_ZENITH_COS = 1e-15


def _cos_elevation(theta: np.ndarray | float) -> np.ndarray:
    cos_theta = np.cos(theta)
    return np.where(np.abs(cos_theta) < _ZENITH_COS, 0.0, cos_theta)


def _rt(positions: np.ndarray, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    x = positions[..., 0]
    y = positions[..., 1]
    cos_theta = _cos_elevation(theta)
    return x * cos_theta * np.sin(phi) + y * cos_theta * np.cos(phi)


def _at(positions: np.ndarray, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    y = positions[..., 1]
    z = positions[..., 2]
    return y * _cos_elevation(theta) * np.cos(phi) + z * np.sin(theta)


def path_diff_rt(cell_position: np.ndarray, doa: DoA) -> np.ndarray | float:
    """IRS-side path difference for coordinates relative to the reference cell."""
    theta, phi = doa.radians()
    value = _rt(np.asarray(cell_position, dtype=np.float64), theta, phi)
    return float(value) if np.ndim(value) == 0 else value


def path_diff_at(element_position: np.ndarray, doa: DoA) -> np.ndarray | float:
    """Array-side path difference for coordinates relative to the reference element."""
    theta, phi = doa.radians()
    value = _at(np.asarray(element_position, dtype=np.float64), theta, phi)
    return float(value) if np.ndim(value) == 0 else value


def irs_path_differences(geom: SceneGeometry, doa: DoA) -> np.ndarray:
    relative = irs_positions(geom) - np.asarray(geom.irs_offset, dtype=np.float64)
    return np.asarray(path_diff_rt(relative, doa), dtype=np.float64)


def array_path_differences(geom: SceneGeometry, doa: DoA) -> np.ndarray:
    relative = upa_positions(geom) - np.asarray(geom.array_offset, dtype=np.float64)
    return np.asarray(path_diff_at(relative, doa), dtype=np.float64)


def rt_path_table(geom: SceneGeometry, theta_deg: np.ndarray, phi_deg: np.ndarray) -> np.ndarray:
    """IRS path differences for broadcast angle arrays; returns shape angles.shape + (M^R,)."""
    relative = irs_positions(geom) - np.asarray(geom.irs_offset, dtype=np.float64)
    theta = np.radians(np.asarray(theta_deg, dtype=np.float64))[..., None]
    phi = np.radians(np.asarray(phi_deg, dtype=np.float64))[..., None]
    return _rt(relative, theta, phi)
