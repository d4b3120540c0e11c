"""Domain construction: physical eddy / jet-core cells and synthetic shapes."""

import json
import math

import numpy as np
import pytest

from jetexit.domains import (
    GAMMA_LOWER,
    GAMMA_UPPER,
    MARKER_CODE,
    DomainSpec,
    build_eddy_domain,
    build_jet_core_domain,
    make_disk_domain,
    make_ellipse_domain,
    make_strip_domain,
)
from jetexit.errors import GeometryError, MarkerError, ParameterError
from jetexit.flowfield import make_params, stream_function

P3 = make_params(1.0 / 3.0)


@pytest.fixture(scope="module")
def eddy():
    return build_eddy_domain(P3)


@pytest.fixture(scope="module")
def trough():
    return build_jet_core_domain(P3)


@pytest.fixture(scope="module")
def crest():
    return build_jet_core_domain(P3, phase="crest")


def test_eddy_frozen_area_and_axes(eddy):
    assert eddy.area == pytest.approx(0.756049121709558, rel=1e-9)
    rx, ry_up, ry_down = eddy.ref_axes
    assert rx == pytest.approx(math.pi / P3.k, abs=1e-12)
    assert ry_up == pytest.approx(0.1729981588218199, abs=1e-9)
    assert ry_down == pytest.approx(0.17747653117722617, abs=1e-9)


def test_eddy_boundary_sits_on_saddle_level(eddy):
    level = eddy.marker_level(GAMMA_UPPER)
    assert level == pytest.approx(0.20322211885522606, abs=1e-12)
    for seg in eddy.segments:
        x, y = seg.curve.points.T
        psi = stream_function(P3, x, y)
        assert np.abs(psi - level).max() < 1e-9


def test_eddy_contains_and_markers(eddy):
    cx, cy = eddy.center
    assert eddy.contains(cx, cy)
    assert not eddy.contains(cx, cy + 0.5)
    assert not eddy.contains(cx + 0.6 * P3.period, cy)
    up = eddy.segments_for(GAMMA_UPPER)[0].curve.points[50]
    lo = eddy.segments_for(GAMMA_LOWER)[0].curve.points[50]
    assert eddy.exit_markers(*up) == MARKER_CODE[GAMMA_UPPER]
    assert eddy.exit_markers(*lo) == MARKER_CODE[GAMMA_LOWER]


def test_core_frozen_area_and_levels(trough):
    assert trough.area == pytest.approx(4.601052415038322, rel=1e-9)
    assert trough.levels[GAMMA_UPPER] == pytest.approx(-0.20322211885522606, abs=1e-12)
    assert trough.levels[GAMMA_LOWER] == pytest.approx(+0.20322211885522606, abs=1e-12)


def test_core_window_and_segments(trough, crest):
    assert trough.x_range == (0.0, pytest.approx(P3.period))
    assert crest.x_range == (pytest.approx(math.pi / P3.k), pytest.approx(math.pi / P3.k + P3.period))
    # the chain through an interior saddle is split there
    assert [s.name for s in trough.segments] == ["upper", "lower_west", "lower_east"]
    assert [s.name for s in crest.segments] == ["upper_west", "upper_east", "lower"]


def test_crest_is_glide_image_of_trough(trough, crest):
    # (x, y) -> (x + pi/k, -y) flips the stream function sign, so the
    # crest cell is the trough cell with the two interfaces exchanged
    assert crest.area == pytest.approx(trough.area, rel=1e-10)
    shift = math.pi / P3.k
    for x in np.linspace(0.3, P3.period - 0.3, 7):
        y_up = trough.boundary_y(x, GAMMA_UPPER)
        assert crest.boundary_y(x + shift, GAMMA_LOWER) == pytest.approx(-y_up, abs=1e-9)
        y_lo = trough.boundary_y(x, GAMMA_LOWER)
        assert crest.boundary_y(x + shift, GAMMA_UPPER) == pytest.approx(-y_lo, abs=1e-9)


def test_core_classify_by_nearest_interface(trough):
    x = 0.7
    y_up = trough.boundary_y(x, GAMMA_UPPER)
    y_lo = trough.boundary_y(x, GAMMA_LOWER)
    assert trough.exit_markers(x, y_up) == MARKER_CODE[GAMMA_UPPER]
    assert trough.exit_markers(x, y_lo) == MARKER_CODE[GAMMA_LOWER]
    assert trough.contains(x, 0.5 * (y_up + y_lo))
    # inside the bbox but in the eddy wedge below the southern chain
    assert not trough.contains(0.7, -0.75)
    assert not trough.contains(0.7 + math.pi / P3.k, 0.75)
    assert not trough.contains(-0.5, 0.0)


def test_unknown_marker_raises(eddy):
    with pytest.raises(MarkerError):
        eddy.marker_level("gamma_sideways")
    with pytest.raises(MarkerError):
        eddy.segments_for("gamma_sideways")


def test_serialization_round_trip(eddy, trough):
    for dom in (eddy, trough):
        back = DomainSpec.from_dict(json.loads(dom.to_json()))
        assert back.kind == dom.kind
        assert back.area == pytest.approx(dom.area, rel=1e-15)
        assert back.levels.keys() == dom.levels.keys()
        for m, lv in dom.levels.items():
            assert back.levels[m] == pytest.approx(lv, rel=1e-15)
        for s0, s1 in zip(dom.segments, back.segments):
            assert s1.name == s0.name and s1.marker == s0.marker
            assert np.allclose(s1.curve.points, s0.curve.points, rtol=0, atol=1e-15)
        # hooks must be reattached on load
        xs = np.array([dom.bbox()[0] - 1.0])
        assert not back.contains(xs, np.array([0.0]))[0]
        assert back.mc_spec()["tag"] == dom.mc_spec()["tag"]


def test_mc_spec_tags(eddy, trough):
    assert eddy.mc_spec()["tag"] == "jet_band"
    assert eddy.mc_spec()["psi_hi"] == math.inf
    spec = trough.mc_spec()
    assert spec["tag"] == "jet_band"
    assert spec["psi_lo"] == pytest.approx(trough.levels[GAMMA_UPPER])
    assert spec["psi_hi"] == pytest.approx(trough.levels[GAMMA_LOWER])
    assert make_disk_domain(0.5).mc_spec()["tag"] == "disk"
    assert make_strip_domain(0.0, 1.0, -0.5, 0.5).mc_spec()["tag"] == "strip"
    with pytest.raises(GeometryError):
        make_ellipse_domain(rx=1.0, ry=0.5).mc_spec()


def test_synthetic_shapes():
    ell = make_ellipse_domain(0.5, -1.0, 2.0, 0.75)
    assert ell.area == pytest.approx(math.pi * 2.0 * 0.75, rel=1e-8)
    assert ell.contains(0.5, -1.0)
    assert not ell.contains(2.6, -1.0)
    assert ell.exit_markers(0.5, -0.25) == MARKER_CODE[GAMMA_UPPER]
    assert ell.exit_markers(0.5, -1.75) == MARKER_CODE[GAMMA_LOWER]
    disk = make_disk_domain(0.5)
    assert disk.area == pytest.approx(math.pi * 0.25, rel=1e-8)
    strip = make_strip_domain(0.0, 2.0, -0.5, 0.5)
    assert strip.area == pytest.approx(2.0)
    assert strip.boundary_y(1.3, GAMMA_UPPER) == pytest.approx(0.5)
    assert strip.boundary_y(1.3, GAMMA_LOWER) == pytest.approx(-0.5)
    with pytest.raises(ParameterError):
        make_strip_domain(1.0, 0.0, 0.0, 1.0)
    with pytest.raises(ParameterError):
        make_ellipse_domain(rx=-1.0)


def test_translation_leaves_synthetic_area_alone():
    a0 = make_ellipse_domain(0.0, 0.0, 1.3, 0.4).area
    a1 = make_ellipse_domain(7.25, -3.0, 1.3, 0.4).area
    assert a1 == pytest.approx(a0, abs=1e-10)


def test_boundary_by_reference_angle_on_ellipse():
    ell = make_ellipse_domain(1.0, 2.0, 1.5, 0.5)
    phis = np.linspace(0.0, 2.0 * np.pi, 9)
    pts = ell.boundary_by_reference_angle(phis)
    assert np.allclose(pts[:, 0], 1.0 + 1.5 * np.cos(phis), atol=1e-12)
    assert np.allclose(pts[:, 1], 2.0 + 0.5 * np.sin(phis), atol=1e-12)


def test_eddy_reference_rays_land_on_boundary(eddy):
    pts = eddy.boundary_by_reference_angle(np.linspace(0.1, 2.0 * np.pi - 0.1, 11))
    level = eddy.marker_level(GAMMA_UPPER)
    psi = stream_function(P3, pts[:, 0], pts[:, 1])
    assert np.abs(psi - level).max() < 1e-9


def test_project_to_boundary(eddy):
    pts = np.array([[0.2, -0.6], [-0.4, -0.7]])
    proj = eddy.project_to_boundary(pts, GAMMA_UPPER)
    level = eddy.marker_level(GAMMA_UPPER)
    psi = stream_function(P3, proj[:, 0], proj[:, 1])
    assert np.abs(psi - level).max() < 1e-10
