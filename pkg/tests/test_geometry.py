import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dsisd import (ArrayGeometry, Position2D, SceneModel, Wavelength, build_path_delay_matrix,
                   make_ula, path_delay_entry)
from dsisd.errors import DegenerateGeometryError
from dsisd.geometry import path_delay_coords

from oracles import path_delay_loop

LAM = Wavelength(0.125)
coord = st.floats(-3, 3, allow_nan=False)


def test_entry_one_wavelength():
    # d = lambda: phase -2 pi, magnitude 1 / (4 pi lambda)
    v = path_delay_entry(Position2D(0, 0), Position2D(0, 0.125), LAM)
    assert v == pytest.approx(0.636620 + 0j, abs=1e-6)
    assert v.real == pytest.approx(1 / (4 * math.pi * 0.125), rel=1e-12)


def test_entry_half_wavelength():
    v = path_delay_entry(Position2D(0, 0), Position2D(0, 0.0625), LAM)
    assert v == pytest.approx(-1.273240 + 0j, abs=1e-6)


def test_entry_zero_distance_raises():
    with pytest.raises(DegenerateGeometryError):
        path_delay_entry(Position2D(1, 1), Position2D(1, 1), LAM)


@given(coord, coord, coord, coord)
def test_entry_magnitude(ax, ay, sx, sy):
    d = math.hypot(ax - sx, ay - sy)
    if d < 1e-3:
        return
    v = path_delay_entry(Position2D(ax, ay), Position2D(sx, sy), LAM)
    assert abs(v) * 4 * math.pi * d == pytest.approx(1.0, rel=1e-12)


def test_matrix_single_pair():
    arr = make_ula(1, 0.1, Position2D(0.3, -0.2), 0)
    scene = SceneModel((Position2D(1.0, 1.0),), [1.0])
    p = build_path_delay_matrix(arr, scene, LAM)
    assert p.shape == (1, 1)
    ref = path_delay_entry(arr.elements[0], scene.scatterers[0], LAM)
    assert p[0, 0] == pytest.approx(ref, rel=1e-14)


def test_matrix_symmetric_rows():
    arr = ArrayGeometry((Position2D(-0.5, 0), Position2D(0.5, 0)))
    p = build_path_delay_matrix(arr, [Position2D(0, 0.7)], LAM)
    assert p[0, 0] == p[1, 0]


def test_matrix_matches_double_loop(rng):
    arr = make_ula(8, 0.0625, Position2D(-1.7, 1.0), -30.0)
    pts = rng.uniform(-0.5, 0.5, (4, 2))
    scene = SceneModel(tuple(Position2D(*p) for p in pts), np.ones(4))
    p = build_path_delay_matrix(arr, scene, LAM)
    ref = path_delay_loop(arr.coords(), pts, 0.125)
    np.testing.assert_allclose(p, ref, rtol=1e-12)


def test_matrix_reports_degenerate_index():
    arr = make_ula(3, 0.5, Position2D(0, 0), 0)
    with pytest.raises(DegenerateGeometryError) as exc:
        build_path_delay_matrix(arr, [Position2D(3, 3), Position2D(0.5, 0)], LAM)
    assert exc.value.index == (2, 1)


def test_structural_magnitude_all_entries(rng):
    ants = rng.uniform(-2, 2, (6, 2))
    sc = rng.uniform(-0.5, 0.5, (9, 2)) + [0, 3]
    p = path_delay_coords(ants, sc, LAM)
    d = np.linalg.norm(ants[:, None] - sc[None], axis=2)
    np.testing.assert_allclose(np.abs(p) * 4 * np.pi * d, 1.0, rtol=1e-12)


@settings(max_examples=30)
@given(st.floats(-10, 10), st.floats(-10, 10), st.integers(0, 2 ** 31))
def test_translation_invariance(dx, dy, seed):
    g = np.random.default_rng(seed)
    ants = g.uniform(-1, 1, (4, 2))
    sc = g.uniform(-1, 1, (5, 2)) + [0, 3]
    p0 = path_delay_coords(ants, sc, LAM)
    p1 = path_delay_coords(ants + [dx, dy], sc + [dx, dy], LAM)
    np.testing.assert_allclose(p1, p0, rtol=1e-9)


@settings(max_examples=30)
@given(st.floats(-180, 180), st.integers(0, 2 ** 31))
def test_rotation_covariance(angle, seed):
    g = np.random.default_rng(seed)
    ants = g.uniform(-1, 1, (4, 2))
    sc = g.uniform(-1, 1, (5, 2)) + [0, 3]
    th = math.radians(angle)
    rot = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    p0 = path_delay_coords(ants, sc, LAM)
    p1 = path_delay_coords(ants @ rot.T, sc @ rot.T, LAM)
    # the phase is k d with k d ~ 200 rad, so absolute agreement is ~1e-13 * 200
    np.testing.assert_allclose(p1, p0, rtol=1e-10)


def test_ula_single_element():
    arr = make_ula(1, 0.2, Position2D(0.4, -1.0), 33)
    assert arr.elements == (Position2D(0.4, -1.0),)


def test_ula_two_elements():
    arr = make_ula(2, 0.3, Position2D(1.0, 2.0), 0)
    np.testing.assert_allclose(arr.coords(), [[0.85, 2.0], [1.15, 2.0]], atol=1e-15)


def test_ula_spacing_and_collinearity():
    s = 0.0625
    arr = make_ula(4, s, Position2D(0.1, 0.2), 45)
    c = arr.coords()
    np.testing.assert_allclose(np.linalg.norm(np.diff(c, axis=0), axis=1), s, rtol=1e-12)
    np.testing.assert_allclose(c.mean(axis=0), [0.1, 0.2], atol=1e-15)
    direction = np.diff(c, axis=0) / s
    np.testing.assert_allclose(direction, [[math.sqrt(0.5)] * 2] * 3, rtol=1e-12)


@pytest.mark.parametrize("count,spacing", [(0, 0.1), (2, 0.0), (2, -1.0)])
def test_ula_preconditions(count, spacing):
    with pytest.raises(ValueError):
        make_ula(count, spacing, Position2D(0, 0), 0)


def test_type_invariants():
    with pytest.raises(ValueError):
        Position2D(float("nan"), 0)
    with pytest.raises(ValueError):
        Wavelength(0.0)
    with pytest.raises(ValueError):
        SceneModel((Position2D(0, 0),), [1, 2])
    with pytest.raises(ValueError):
        ArrayGeometry(())
