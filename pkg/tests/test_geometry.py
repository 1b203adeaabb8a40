from __future__ import annotations

import math

import numpy as np
import pytest

from geometry import (
    DoA,
    GeometryError,
    SceneGeometry,
    array_path_differences,
    far_field_distance,
    geometry_hash,
    irs_path_differences,
    irs_positions,
    pairwise_distances,
    path_diff_at,
    path_diff_rt,
    rt_path_table,
    upa_positions,
)


def _single(array_offset=(0.0, 1.0, 1.0), irs_offset=(0.0, 0.0, 0.0)) -> SceneGeometry:
    return SceneGeometry(
        m_a_y=1, m_a_z=1, m_r_x=1, m_r_y=1, array_offset=array_offset, irs_offset=irs_offset
    )


def test_single_element_positions_equal_offsets():
    geom = _single()
    np.testing.assert_array_equal(upa_positions(geom), [[0.0, 1.0, 1.0]])
    np.testing.assert_array_equal(irs_positions(geom), [[0.0, 0.0, 0.0]])


def test_two_element_array_and_irs():
    geom = SceneGeometry(m_a_y=2, m_a_z=1, m_r_x=2, m_r_y=1)
    np.testing.assert_allclose(upa_positions(geom), [[0, 1, 1], [0, 1.15, 1]])
    np.testing.assert_allclose(irs_positions(geom), [[0, 0, 0], [0.075, 0, 0]])


def test_default_preset_spans():
    geom = SceneGeometry()
    array = upa_positions(geom)
    irs = irs_positions(geom)
    assert array.shape == (25, 3)
    assert irs.shape == (25, 3)
    assert np.ptp(array[:, 1]) == pytest.approx(0.6)
    assert np.ptp(array[:, 2]) == pytest.approx(0.6)
    assert np.all(array[:, 0] == 0.0)
    assert np.ptp(irs[:, 0]) == pytest.approx(0.3)
    assert np.ptp(irs[:, 1]) == pytest.approx(0.3)
    assert np.all(irs[:, 2] == 0.0)


def test_enumeration_is_row_major():
    geom = SceneGeometry()
    array = upa_positions(geom)
    # element index i_z * M^A_y + i_y
    np.testing.assert_allclose(array[6], [0.0, 1.15, 1.15])
    irs = irs_positions(geom)
    np.testing.assert_allclose(irs[7], [0.15, 0.075, 0.0])


@pytest.mark.parametrize(
    ("array_offset", "irs_offset", "expected"),
    [((0.0, 1.0, 1.0), (0.0, 0.0, 0.0), math.sqrt(2.0)), ((0.0, 0.0, 3.0), (4.0, 0.0, 0.0), 5.0)],
)
def test_pairwise_distance_examples(array_offset, irs_offset, expected):
    distances = pairwise_distances(_single(array_offset, irs_offset))
    assert distances.shape == (1, 1)
    assert distances[0, 0] == pytest.approx(expected)


def test_pairwise_distances_reject_coincident_points():
    geom = _single(array_offset=(0.0, 0.0, 0.0))
    with pytest.raises(GeometryError, match="coincides"):
        pairwise_distances(geom)


def test_pairwise_distances_match_brute_force():
    geom = SceneGeometry()
    array = upa_positions(geom)
    irs = irs_positions(geom)
    distances = pairwise_distances(geom)
    for m in (0, 7, 24):
        for n in (0, 12, 24):
            assert distances[m, n] == pytest.approx(float(np.linalg.norm(array[m] - irs[n])))
    assert np.all(distances > 0)


def test_path_diff_rt_examples():
    assert path_diff_rt(np.array([0.3, 0.2, 0.0]), DoA(90.0, 37.0)) == pytest.approx(0.0, abs=1e-15)
    assert path_diff_rt(np.array([0.075, 0.0, 0.0]), DoA(0.0, 90.0)) == pytest.approx(0.075)
    expected = 0.075 * math.cos(math.radians(30)) * (math.sin(math.radians(45)) + math.cos(math.radians(45)))
    assert path_diff_rt(np.array([0.075, 0.075, 0.0]), DoA(30.0, 45.0)) == pytest.approx(expected)
    assert expected == pytest.approx(0.09186, abs=1e-5)


def test_path_diff_at_examples():
    assert path_diff_at(np.zeros(3), DoA(12.0, 34.0)) == 0.0
    assert path_diff_at(np.array([0.0, 0.0, 0.15]), DoA(90.0, 10.0)) == pytest.approx(0.15)
    value = path_diff_at(np.array([0.0, 0.15, 0.15]), DoA(45.0, 60.0))
    assert value == pytest.approx(0.15910, abs=1e-5)


@pytest.mark.parametrize("alpha", [-2.0, 0.5, 3.0])
def test_path_differences_are_linear_in_position(alpha):
    p = np.array([0.11, -0.07, 0.05])
    doa = DoA(23.0, 141.0)
    assert path_diff_rt(alpha * p, doa) == pytest.approx(alpha * path_diff_rt(p, doa))
    assert path_diff_at(alpha * p, doa) == pytest.approx(alpha * path_diff_at(p, doa))


def test_path_diff_rt_bounded_by_planar_norm():
    rng = np.random.default_rng(3)
    for _ in range(50):
        p = rng.normal(size=3)
        doa = DoA(rng.uniform(0, 90), rng.uniform(0, 180))
        assert abs(path_diff_rt(p, doa)) <= np.hypot(p[0], p[1]) + 1e-12


def test_vectorized_differences_match_per_element():
    geom = SceneGeometry()
    doa = DoA(30.0, 45.0)
    irs = irs_positions(geom)
    array = upa_positions(geom)
    expected_rt = [path_diff_rt(p - irs[0], doa) for p in irs]
    expected_at = [path_diff_at(p - array[0], doa) for p in array]
    np.testing.assert_allclose(irs_path_differences(geom, doa), expected_rt)
    np.testing.assert_allclose(array_path_differences(geom, doa), expected_at)


def test_rt_path_table_broadcasts_angles():
    geom = SceneGeometry()
    thetas = np.array([[10.0], [60.0]])
    phis = np.array([[0.0, 90.0, 135.0]])
    table = rt_path_table(geom, thetas, phis)
    assert table.shape == (2, 3, 25)
    np.testing.assert_allclose(table[1, 2], irs_path_differences(geom, DoA(60.0, 135.0)))


def test_positions_are_bit_stable():
    geom = SceneGeometry()
    assert upa_positions(geom).tobytes() == upa_positions(geom).tobytes()
    assert geometry_hash(geom) == geometry_hash(SceneGeometry())


@pytest.mark.parametrize(("theta", "phi"), [(-1.0, 0.0), (91.0, 0.0), (0.0, 180.5), (math.nan, 0.0)])
def test_doa_rejects_out_of_range(theta, phi):
    with pytest.raises(GeometryError):
        DoA(theta, phi)


def test_from_frequency_preset_matches_defaults():
    geom = SceneGeometry.from_frequency(1e9)
    assert geom.wavelength == pytest.approx(0.3)
    assert geom.d_a_y == pytest.approx(0.15)
    assert geom.d_r_x == pytest.approx(0.075)


def test_far_field_violation_rejected():
    assert far_field_distance(SceneGeometry()) == pytest.approx(2.4)
    with pytest.raises(ValueError, match="geometry.source_range must exceed"):
        SceneGeometry(source_range=2.0)


def test_invalid_counts_rejected():
    with pytest.raises(ValueError, match="geometry.m_a_y must be >= 1"):
        SceneGeometry(m_a_y=0)


def test_zenith_path_differences_are_exactly_zero():
    geom = SceneGeometry()
    assert not np.any(irs_path_differences(geom, DoA(90.0, 33.0)))
    assert not np.any(rt_path_table(geom, np.array([90.0, 90.0]), np.array([0.0, 120.0])))
