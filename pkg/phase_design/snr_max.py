from __future__ import annotations

import math

import numpy as np

from channel import PhaseVector, as_generator
from channel.signal import RngLike
from geometry import DoA, SceneGeometry, array_path_differences, irs_path_differences, pairwise_distances


def snr_max_phases(geom: SceneGeometry, coarse_doa: DoA) -> PhaseVector:
    """Closed-form SNR-maximizing phases evaluated at a coarse DoA estimate."""
    r_ar = pairwise_distances(geom)
    r_rt = irs_path_differences(geom, coarse_doa)
    r_at = array_path_differences(geom, coarse_doa)
    total = np.sum(r_ar - r_rt[None, :] + r_at[:, None], axis=0)
    phases = 2.0 * math.pi / (geom.m_a * geom.wavelength) * total
    return PhaseVector(phases).wrapped()


def random_phases(m_r: int, rng: RngLike = None) -> PhaseVector:
    return PhaseVector(as_generator(rng).uniform(-math.pi, math.pi, size=m_r))
