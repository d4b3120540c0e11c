"""Stagnation points, splines, and level-set tracing."""

import math

import numpy as np
import pytest

from jetexit.errors import ParameterError, TracingBudgetError
from jetexit.flowfield import make_params, stream_function, velocity
from jetexit.geometry import (
    ParametricSpline,
    find_stagnation_points,
    fit_cubic_spline,
    trace_level_set,
)

P3 = make_params(1.0 / 3.0)


@pytest.fixture(scope="module")
def skeleton():
    pts = find_stagnation_points(P3, window=(0.0, P3.period, -2.0, 2.0))
    # the window is closed, so x = period repeats the x = 0 column
    return [s for s in pts if s.x < P3.period - 1e-9]


def test_one_period_has_two_saddles_two_centers(skeleton):
    kinds = sorted(s.kind for s in skeleton)
    assert kinds == ["center", "center", "saddle", "saddle"]


def test_stagnation_point_locations(skeleton):
    # frozen at beta = 1/3; cross-checked against the velocity zeros below
    want = [
        ("center", 0.0, -0.7765789375308688),
        ("center", 1.7002176923707384, 0.7765789375308688),
        ("saddle", 0.0, 0.7965770520195932),
        ("saddle", 1.7002176923707384, -0.7965770520195932),
    ]
    got = sorted(((s.kind, s.x, s.y) for s in skeleton), key=lambda t: (t[0], t[1]))
    for (wk, wx, wy), (gk, gx, gy) in zip(want, got):
        assert gk == wk
        assert gx == pytest.approx(wx, abs=1e-9)
        assert gy == pytest.approx(wy, abs=1e-9)


def test_drift_vanishes_at_roots(skeleton):
    for s in skeleton:
        u, v = velocity(P3, s.x, s.y)
        assert math.hypot(u, v) < 1e-10


def test_stream_value_stored(skeleton):
    for s in skeleton:
        assert s.stream_value == pytest.approx(stream_function(P3, s.x, s.y), abs=1e-14)
    levels = sorted(abs(s.stream_value) for s in skeleton if s.kind == "saddle")
    assert levels[0] == pytest.approx(0.203222118855226, abs=1e-12)


def test_saddles_pair_up_by_glide(skeleton):
    shift = math.pi / P3.k
    saddles = [(s.x, s.y) for s in skeleton if s.kind == "saddle"]

    def circ(a, b):
        d = abs(a - b) % P3.period
        return min(d, P3.period - d)

    for x, y in saddles:
        gx = (x + shift) % P3.period
        hits = [q for q in saddles if circ(q[0], gx) < 1e-8 and abs(q[1] + y) < 1e-8]
        assert len(hits) == 1


def test_spline_interpolates_knots():
    ts = np.linspace(0.0, 2.0 * np.pi, 40, endpoint=False)
    pts = np.column_stack([np.cos(ts), np.sin(ts)])
    sp = fit_cubic_spline(pts, closed=True)
    back = sp(sp.knots[:-1])
    assert np.allclose(back, pts, atol=1e-12)


def test_spline_arc_length_and_area_of_circle():
    ts = np.linspace(0.0, 2.0 * np.pi, 200, endpoint=False)
    r = 0.7
    pts = np.column_stack([r * np.cos(ts), r * np.sin(ts)])
    sp = fit_cubic_spline(pts, closed=True)
    assert sp.arc_length() == pytest.approx(2.0 * np.pi * r, rel=1e-8)
    assert sp.area_term() == pytest.approx(np.pi * r**2, rel=1e-8)


def test_spline_closest_point():
    ts = np.linspace(0.0, 2.0 * np.pi, 100, endpoint=False)
    pts = np.column_stack([np.cos(ts), np.sin(ts)])
    sp = fit_cubic_spline(pts, closed=True)
    _, q = sp.closest_point((2.0, 0.0))
    assert q[0] == pytest.approx(1.0, abs=1e-6)
    assert q[1] == pytest.approx(0.0, abs=1e-6)


def test_spline_input_validation():
    with pytest.raises(ParameterError):
        ParametricSpline([[0.0, 0.0], [1.0, 1.0]])
    with pytest.raises(ParameterError):
        ParametricSpline([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])


def test_trace_level_set_stays_on_level():
    # a closed orbit strictly inside the southern eddy, clear of saddles
    level = 0.208
    from scipy.optimize import brentq

    y0 = brentq(lambda y: stream_function(P3, 0.0, y) - level, -0.7765, -0.3)
    curve = trace_level_set(P3, level, (0.0, y0), step=2e-3)
    assert curve.closed
    psi = stream_function(P3, curve.points[:, 0], curve.points[:, 1])
    assert np.abs(psi - level).max() < 1e-8
    assert len(curve) > 100


def test_trace_budget_error():
    with pytest.raises(TracingBudgetError):
        trace_level_set(P3, 0.0, (0.4, 0.0), step=1e-4, max_points=10)


def test_trace_synthetic_circle_closes():
    stream = lambda x, y: x**2 + y**2
    grad = lambda x, y: (2.0 * x, 2.0 * y)
    curve = trace_level_set(
        None, 1.0, (1.0, 0.0), step=5e-3, stream_fn=stream, grad_fn=grad,
        bbox=(-2.0, 2.0, -2.0, 2.0),
    )
    assert curve.closed
    r = np.hypot(curve.points[:, 0], curve.points[:, 1])
    assert np.abs(r - 1.0).max() < 1e-8
