from __future__ import annotations

import numpy as np
import pytest

from channel import ChannelModel, SourceSignal, complex_awgn, composite_steering, received_signal
from geometry import DoA, SceneGeometry
from ml_estimator import (
    MlSearchError,
    SearchGrid,
    SteeringCache,
    ml_grid_search,
    ml_objective,
    snap_to_grid,
    write_surface_csv,
)
from phase_design import random_phases

COARSE = SearchGrid(step=2.0)


@pytest.fixture(scope="module")
def channel() -> ChannelModel:
    return ChannelModel.from_geometry(SceneGeometry())


@pytest.fixture(scope="module")
def phases():
    return random_phases(25, np.random.default_rng(0))


@pytest.fixture(scope="module")
def coarse_cache() -> SteeringCache:
    return SteeringCache(SceneGeometry(), COARSE)


def _observe(channel, phases, doa, snapshots=10):
    return received_signal(composite_steering(channel, phases, doa), SourceSignal.constant(snapshots))


def test_default_grid_counts():
    grid = SearchGrid()
    assert grid.g_theta == 181
    assert grid.g_phi == 361
    assert grid.size == 181 * 361
    assert grid.thetas()[-1] == 90.0
    assert grid.phis()[-1] == 180.0


def test_grid_validation():
    with pytest.raises(ValueError, match="grid.step must be > 0"):
        SearchGrid(step=0.0)
    with pytest.raises(ValueError, match="grid.theta_min must be <= grid.theta_max"):
        SearchGrid(theta_min=50.0, theta_max=40.0)
    with pytest.raises(ValueError, match="grid.phi range"):
        SearchGrid(phi_max=200.0)


def test_snap_to_grid():
    grid = SearchGrid()
    snapped = snap_to_grid(DoA(31.3, 47.7), grid)
    assert (snapped.theta, snapped.phi) == (31.5, 47.5)
    assert snap_to_grid(DoA(31.25, 47.75), grid) == DoA(31.5, 48.0)
    assert snap_to_grid(DoA(30.75, 46.25), grid) == DoA(31.0, 46.5)
    assert snap_to_grid(DoA(90.0, 180.0), COARSE) == DoA(90.0, 180.0)


def test_ml_objective_examples():
    rng = np.random.default_rng(1)
    a = rng.normal(size=6) + 1j * rng.normal(size=6)
    y = np.outer(a, SourceSignal.constant(10, phase=0.3).samples)
    assert ml_objective(y, a) == pytest.approx(np.vdot(a, a).real * 10)
    b = np.array([1, 1j, 0, 0, 0, 0])
    orthogonal = np.outer(np.array([1j, 1, 0, 0, 0, 0]), np.ones(4))
    assert ml_objective(orthogonal, b) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(MlSearchError, match="nonzero"):
        ml_objective(y, np.zeros(6))


def test_ml_objective_matches_literal_eigenvalue():
    rng = np.random.default_rng(2)
    a = rng.normal(size=5) + 1j * rng.normal(size=5)
    y = rng.normal(size=(5, 8)) + 1j * rng.normal(size=(5, 8))
    ah_a = np.vdot(a, a).real
    matrix = ah_a**-0.5 * (a.conj() @ y @ y.conj().T @ a) * ah_a**-0.5
    eig = np.linalg.eigvalsh(np.array([[matrix]]))[-1]
    assert ml_objective(y, a) == pytest.approx(float(np.real(eig)), rel=1e-12)


def test_exact_grid_points_are_recovered_on_default_grid(channel, phases):
    grid = SearchGrid()
    cache = SteeringCache(SceneGeometry(), grid)
    rng = np.random.default_rng(3)
    for _ in range(100):
        # the zenith row is excluded here; it has its own tie-break test
        i_theta = int(rng.integers(0, grid.g_theta - 1))
        i_phi = int(rng.integers(0, grid.g_phi))
        truth = grid.point(i_theta, i_phi)
        result = ml_grid_search(_observe(channel, phases, truth), channel, phases, grid, cache)
        assert result.doa == truth
        assert result.index == (i_theta, i_phi)


def _direction_cosines(theta_deg: float, phi_deg: float) -> np.ndarray:
    theta, phi = np.radians(theta_deg), np.radians(phi_deg)
    return np.cos(theta) * np.array([np.sin(phi), np.cos(phi)])


def test_off_grid_doas_land_within_three_steps_in_direction_cosines(channel, phases):
    grid = SearchGrid()
    cache = SteeringCache(SceneGeometry(), grid)
    rng = np.random.default_rng(9)
    tolerance = 3 * np.radians(grid.step)
    for _ in range(100):
        truth = DoA(rng.uniform(0.0, 90.0), rng.uniform(0.0, 180.0))
        y = _observe(channel, phases, truth)
        result = ml_grid_search(y, channel, phases, grid, cache)
        nearest = snap_to_grid(truth, grid)
        assert result.objective >= ml_objective(y, composite_steering(channel, phases, nearest)) * (1 - 1e-12)
        error = _direction_cosines(result.doa.theta, result.doa.phi) - _direction_cosines(truth.theta, truth.phi)
        assert np.linalg.norm(error) <= tolerance


def test_zenith_ties_resolve_to_first_phi(channel, phases, coarse_cache):
    result = ml_grid_search(_observe(channel, phases, DoA(90.0, 37.0)), channel, phases, COARSE, coarse_cache)
    assert result.index == (COARSE.g_theta - 1, 0)
    assert result.doa == DoA(90.0, 0.0)


def test_pure_noise_still_returns_grid_point(channel, phases, coarse_cache):
    noise = complex_awgn(0.0, 1.0, 25, 10, rng_seed=4)
    result = ml_grid_search(noise, channel, phases, COARSE, coarse_cache)
    assert result.doa.theta in COARSE.thetas()
    assert result.doa.phi in COARSE.phis()


def test_zero_observation_ties_resolve_to_first_index(channel, phases, coarse_cache):
    result = ml_grid_search(np.zeros((25, 4), complex), channel, phases, COARSE, coarse_cache)
    assert result.index == (0, 0)
    assert result.doa == DoA(0.0, 0.0)


def test_scaling_observation_scales_surface(channel, phases, coarse_cache):
    y = _observe(channel, phases, DoA(44.0, 100.0)) + complex_awgn(0.0, 1.0, 25, 10, rng_seed=5)
    base = ml_grid_search(y, channel, phases, COARSE, coarse_cache, keep_surface=True)
    c = 0.3 - 2.0j
    scaled = ml_grid_search(c * y, channel, phases, COARSE, coarse_cache, keep_surface=True)
    np.testing.assert_allclose(scaled.surface, abs(c) ** 2 * base.surface, rtol=1e-10)
    assert scaled.doa == base.doa


def test_search_is_exhaustive_and_cache_agrees(channel, phases, coarse_cache):
    y = _observe(channel, phases, DoA(18.0, 150.0)) + complex_awgn(5.0, 1.0, 25, 10, rng_seed=6)
    cached = ml_grid_search(y, channel, phases, COARSE, coarse_cache, keep_surface=True)
    direct = ml_grid_search(y, channel, phases, COARSE, keep_surface=True)
    np.testing.assert_allclose(cached.surface, direct.surface, rtol=1e-10)
    assert cached.doa == direct.doa
    assert cached.objective == pytest.approx(cached.surface.max())
    rng = np.random.default_rng(7)
    for _ in range(25):
        i, j = rng.integers(0, COARSE.g_theta), rng.integers(0, COARSE.g_phi)
        a = composite_steering(channel, phases, COARSE.point(int(i), int(j)))
        assert cached.objective >= ml_objective(y, a) * (1 - 1e-12)


def test_cache_reuses_last_composite_table(channel, phases, coarse_cache):
    first = coarse_cache.composite_table(channel, phases)
    assert coarse_cache.composite_table(channel, phases) is first
    other = coarse_cache.composite_table(channel, random_phases(25, 1))
    assert other is not first
    assert coarse_cache.nbytes == COARSE.size * 25 * 16


def test_search_rejects_mismatched_inputs(channel, phases, coarse_cache):
    y = _observe(channel, phases, DoA(10.0, 10.0))
    with pytest.raises(MlSearchError, match="different grid"):
        ml_grid_search(y, channel, phases, SearchGrid(step=1.0), coarse_cache)
    with pytest.raises(MlSearchError, match="Y must have shape"):
        ml_grid_search(y[:3], channel, phases, COARSE, coarse_cache)
    with pytest.raises(MlSearchError, match="expected 25 IRS phases"):
        ml_grid_search(y, channel, random_phases(4, 0), COARSE, coarse_cache)


def test_surface_csv(channel, phases, coarse_cache, tmp_path):
    y = _observe(channel, phases, DoA(60.0, 20.0))
    result = ml_grid_search(y, channel, phases, COARSE, coarse_cache, keep_surface=True)
    path = write_surface_csv(result, COARSE, tmp_path / "surface.csv", "seed=1 config_hash=x")
    lines = path.read_text().splitlines()
    assert lines[:2] == ["# seed=1 config_hash=x", "theta,phi,objective"]
    assert len(lines) == 2 + COARSE.size
    assert lines[2].startswith("0,0,")
    bare = ml_grid_search(y, channel, phases, COARSE, coarse_cache)
    with pytest.raises(MlSearchError, match="keep_surface"):
        write_surface_csv(bare, COARSE, tmp_path / "bare.csv")
