"""Monte Carlo first-exit sampling against analytic references."""

import json
import math

import numpy as np
import pytest

from jetexit.domains import (
    GAMMA_LOWER,
    GAMMA_UPPER,
    build_eddy_domain,
    make_disk_domain,
    make_strip_domain,
)
from jetexit.errors import CensoringError, ParameterError
from jetexit.flowfield import make_params
from jetexit.mc import (
    dt_convergence_study,
    simulate_first_exit,
    simulate_uniform_exit,
    uniform_starts,
)

P3 = make_params(1.0 / 3.0)


@pytest.fixture(scope="module")
def strip_stats():
    # pure diffusion in a unit-height strip: both the splitting
    # probability and the exit time are known in closed form
    p = make_params(0.2, epsilon=0.01)
    dom = make_strip_domain(0.0, 2.0, 0.0, 1.0)
    return simulate_first_exit(p, dom, (1.0, 0.3), dt=2e-3, n_paths=2000, seed=11)


def test_strip_splitting_probability(strip_stats):
    st = strip_stats
    exact = 0.3  # (y - y0) / (y1 - y0)
    p_up = st.probability(GAMMA_UPPER)
    assert st.probability(GAMMA_UPPER) + st.probability(GAMMA_LOWER) == 1.0
    assert abs(p_up - exact) < 3.0 * st.std_err_prob[GAMMA_UPPER] + 1e-12


def test_strip_exit_time(strip_stats):
    st = strip_stats
    exact = 0.3 * 0.7 / (2.0 * 0.01)
    # allow the O(dt) positive discretization bias alongside 3 sigma
    assert abs(st.mean_exit_time - exact) < 3.0 * st.std_err_time + 0.05 * exact


def test_disk_exit_time_center():
    p = make_params(0.0, epsilon=5e-3)
    dom = make_disk_domain(radius=0.5)
    st = simulate_first_exit(p, dom, (0.0, 0.0), dt=5e-4, n_paths=1500, seed=3)
    exact = 0.5**2 / (4.0 * 5e-3)
    assert abs(st.mean_exit_time - exact) < 3.0 * st.std_err_time + 0.03 * exact
    # symmetric exit split between the two half-circle markers
    p_up = st.probability(GAMMA_UPPER)
    assert abs(p_up - 0.5) < 3.0 * st.std_err_prob[GAMMA_UPPER]


def test_same_seed_bitwise():
    p = make_params(0.2, epsilon=0.01)
    dom = make_strip_domain(0.0, 2.0, 0.0, 1.0)
    a = simulate_first_exit(p, dom, (1.0, 0.5), dt=5e-3, n_paths=400, seed=7)
    b = simulate_first_exit(p, dom, (1.0, 0.5), dt=5e-3, n_paths=400, seed=7)
    assert a.exit_counts == b.exit_counts
    assert a.mean_exit_time == b.mean_exit_time
    assert np.array_equal(a.exit_x, b.exit_x)
    assert np.array_equal(a.exit_y, b.exit_y)
    c = simulate_first_exit(p, dom, (1.0, 0.5), dt=5e-3, n_paths=400, seed=8)
    assert not np.array_equal(a.exit_x, c.exit_x)


def test_censoring_cap():
    p = make_params(0.2, epsilon=0.01)
    dom = make_strip_domain(0.0, 2.0, 0.0, 1.0)
    with pytest.raises(CensoringError) as info:
        simulate_first_exit(p, dom, (1.0, 0.5), dt=1e-3, n_paths=64, seed=0, max_time=0.05)
    assert info.value.n_paths == 64
    assert 0 < info.value.n_censored <= 64
    st = simulate_first_exit(
        p, dom, (1.0, 0.5), dt=1e-3, n_paths=64, seed=0, max_time=0.05,
        allow_censoring=True,
    )
    assert st.censored == info.value.n_censored
    assert st.censored + sum(st.exit_counts.values()) == 64


def test_start_point_validation():
    p = make_params(0.2, epsilon=0.01)
    dom = make_strip_domain(0.0, 2.0, 0.0, 1.0)
    with pytest.raises(ParameterError):
        simulate_first_exit(p, dom, (1.0, 1.5), n_paths=10)
    with pytest.raises(ParameterError):
        simulate_first_exit(p, dom, (1.0, 0.5), dt=-1e-3, n_paths=10)
    with pytest.raises(ParameterError):
        simulate_first_exit(p, dom, (1.0, 0.5), n_paths=0)


def test_uniform_starts_inside_and_deterministic():
    dom = build_eddy_domain(P3)
    xs, ys = uniform_starts(dom, 500, seed=5)
    assert dom.contains(xs, ys).all()
    xs2, ys2 = uniform_starts(dom, 500, seed=5)
    assert np.array_equal(xs, xs2) and np.array_equal(ys, ys2)
    xs3, _ = uniform_starts(dom, 500, seed=6)
    assert not np.array_equal(xs, xs3)


def test_uniform_exit_on_strip():
    p = make_params(0.2, epsilon=0.01)
    dom = make_strip_domain(0.0, 2.0, 0.0, 1.0)
    st = simulate_uniform_exit(p, dom, dt=2e-3, n_paths=1500, seed=2)
    assert st.start is None
    p_up = st.probability(GAMMA_UPPER)
    assert abs(p_up - 0.5) < 3.0 * st.std_err_prob[GAMMA_UPPER]
    # mean exit time from uniform starts: average of y(1-y)/(2 eps) = 1/(12 eps)
    exact = 1.0 / (12.0 * 0.01)
    assert abs(st.mean_exit_time - exact) < 3.0 * st.std_err_time + 0.05 * exact


def test_eddy_paths_hit_both_chains():
    dom = build_eddy_domain(P3)
    st = simulate_first_exit(P3, dom, dom.center, dt=2e-3, n_paths=300, seed=1)
    assert st.exit_counts[GAMMA_UPPER] > 0
    assert st.exit_counts[GAMMA_LOWER] > 0
    assert st.exit_counts[GAMMA_UPPER] + st.exit_counts[GAMMA_LOWER] == 300
    # exit points land on the separatrix level
    from jetexit.flowfield import stream_function

    lev = dom.marker_level(GAMMA_UPPER)
    psi = stream_function(P3, st.exit_x, st.exit_y)
    assert np.abs(psi - lev).max() < 0.02


def test_dt_study_contract():
    p = make_params(0.2, epsilon=0.01)
    dom = make_strip_domain(0.0, 2.0, 0.0, 1.0)
    with pytest.raises(ParameterError):
        dt_convergence_study(p, dom, (1.0, 0.5), [1e-3, 1e-3])
    report = dt_convergence_study(
        p, dom, (1.0, 0.5), [8e-3, 4e-3, 2e-3], n_paths=800, seed=4
    )
    assert [r["dt"] for r in report["rows"]] == [8e-3, 4e-3, 2e-3]
    assert len(report["pairwise_agreement"]) == 2
    assert report["converged_dt"] in (8e-3, 4e-3, 2e-3, None)


def test_statistics_serialization(tmp_path, strip_stats):
    doc = json.loads(strip_stats.to_json())
    assert doc["n_paths"] == 2000
    assert doc["exit_counts"][GAMMA_UPPER] == strip_stats.exit_counts[GAMMA_UPPER]
    assert doc["dt"] == 2e-3
    path = tmp_path / "stats.json"
    strip_stats.save(path)
    assert json.loads(path.read_text()) == doc
