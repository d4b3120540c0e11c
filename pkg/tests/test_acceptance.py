"""End-to-end acceptance gates.

Each test logs one verdict line through the ``criteria`` fixture (printed
in the terminal summary) and then asserts on it, so a missed gate shows
up as a red test carrying the measured evidence, not a silent skip.
"""

import json
import math
import time
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from jetexit import fem
from jetexit.cli import main as cli_main
from jetexit.contours import field_svg, layering_profiles
from jetexit.domains import (
    GAMMA_LOWER,
    GAMMA_UPPER,
    MARKER_CODE,
    build_eddy_domain,
    build_jet_core_domain,
    make_disk_domain,
    make_strip_domain,
)
from jetexit.exitproblem import (
    SOLVER_RTOL,
    Resolution,
    monotonicity_check,
    run_default_sweep,
    solve_domain_suite,
)
from jetexit.flowfield import make_params
from jetexit.meshing import mesh_jet_core

P3 = make_params(1.0 / 3.0)
EPS = 1e-3


@pytest.fixture(scope="session")
def sweep_result():
    t0 = time.monotonic()
    table, features = run_default_sweep()
    return table, features, time.monotonic() - t0


@pytest.fixture(scope="session")
def beta_third_suites():
    return {
        "eddy": solve_domain_suite(P3, build_eddy_domain(P3)),
        "core": solve_domain_suite(P3, build_jet_core_domain(P3)),
    }


@pytest.fixture(scope="session")
def oracle_suites():
    p = make_params(0.0, epsilon=EPS)
    disk = solve_domain_suite(
        p, make_disk_domain(radius=0.5), Resolution(eddy=(16, 48), refinements=2)
    )
    strip = solve_domain_suite(
        p, make_strip_domain(0.0, 2.0, -0.5, 0.5), Resolution(core=(16, 12), refinements=1)
    )
    return {"disk": disk, "strip": strip}


@pytest.fixture(scope="session")
def mc_validation(tmp_path_factory):
    out = tmp_path_factory.mktemp("mcv") / "run"
    t0 = time.monotonic()
    rc = cli_main(["mc-validate", "--output", str(out)])
    elapsed = time.monotonic() - t0
    report = json.loads((out / "validation.json").read_text())
    return rc, report, elapsed


def test_criterion_1_eddy_splitting_crossover(sweep_result, criteria):
    table, feats, elapsed = sweep_result
    got = feats.get("crossing_eddy")
    ok_rows = table.ok_rows()
    d = (table.column("p_eddy_lower") - table.column("p_eddy_upper"))[ok_rows]
    in_time = elapsed <= 30 * 60
    ok = got is not None and abs(got - 0.333) <= 0.03 and in_time
    where = "none" if got is None else f"{got:.4f}"
    detail = (
        f"crossing at beta={where} (target 0.333 +/- 0.03); lower-minus-upper "
        f"spans [{d.min():+.2e}, {d.max():+.2e}] over {int(ok_rows.sum())} rows; "
        f"sweep took {elapsed:.0f}s (cap 1800s)"
    )
    criteria(1, "eddy exit split crosses even odds near beta=0.333", ok, detail)
    assert ok, detail


def test_criterion_2_retrograde_escape_peak(sweep_result, criteria):
    table, feats, _ = sweep_result
    got = feats.get("peak_p_eddy_lower")
    col = table.column("p_eddy_lower")[table.ok_rows()]
    betas = table.betas[table.ok_rows()]
    ok = got is not None and abs(got - 0.54) <= 0.03
    where = "none" if got is None else f"{got:.4f}"
    j = int(np.nanargmax(col))
    detail = (
        f"unimodal peak at beta={where} (target 0.54 +/- 0.03); column spans "
        f"[{np.nanmin(col):.4f}, {np.nanmax(col):.4f}] with grid argmax at "
        f"beta={betas[j]:.3f}"
    )
    if got is None:
        detail += f"; finder said: {feats.get('errors', {}).get('peak_p_eddy_lower')}"
    criteria(2, "escape toward the retrograde side peaks at beta=0.54", ok, detail)
    assert ok, detail


def test_criterion_3_core_equal_likelihood_band(sweep_result, criteria):
    table, feats, _ = sweep_result
    band = feats.get("band_core")
    diff = np.abs(table.column("p_core_upper") - table.column("p_core_lower"))
    diff = diff[table.ok_rows()]
    sub = table.restrict(0.115, 0.385)
    inside = np.abs(sub.column("p_core_upper") - sub.column("p_core_lower"))
    inside = inside[sub.ok_rows()]
    inside_ok = inside.size > 0 and float(inside.max()) < 0.05
    edges_ok = (
        band is not None
        and abs(band[0] - 0.115) <= 0.03
        and abs(band[1] - 0.385) <= 0.03
    )
    ok = edges_ok and inside_ok
    shown = "none" if band is None else f"({band[0]:.4f}, {band[1]:.4f})"
    detail = (
        f"band edges {shown} (targets 0.115 / 0.385 +/- 0.03); |P_upper - P_lower| "
        f"max {diff.max():.2e} over the whole grid, {inside.max():.2e} on "
        f"[0.115, 0.385] (near-equality requirement {'met' if inside_ok else 'broken'})"
    )
    if band is None:
        detail += f"; finder said: {feats.get('errors', {}).get('band_core')}"
    criteria(3, "core equal-likelihood band edges at 0.115 / 0.385", ok, detail)
    assert ok, detail


def test_criterion_4_residence_time_extrema(sweep_result, criteria):
    table, feats, _ = sweep_result
    peak = feats.get("peak_max_mrt_eddy")
    eddy_ok = peak is not None and abs(peak - 0.432) <= 0.03
    verdict = monotonicity_check(table, "max_mrt_core")
    core_ok = verdict.direction == "increasing"
    eddy_col = table.column("max_mrt_eddy")[table.ok_rows()]
    core_col = table.column("max_mrt_core")[table.ok_rows()]
    ok = eddy_ok and core_ok
    where = "none" if peak is None else f"{peak:.4f}"
    detail = (
        f"eddy max-MRT peak at beta={where} (target 0.432 +/- 0.03), column runs "
        f"{eddy_col[0]:.2f} -> {eddy_col[-1]:.2f}; core max-MRT is "
        f"{verdict.direction} ({core_col[0]:.1f} -> {core_col[-1]:.1f})"
    )
    if peak is None:
        detail += f"; finder said: {feats.get('errors', {}).get('peak_max_mrt_eddy')}"
    criteria(4, "residence-time extrema (eddy peak 0.432, core increasing)", ok, detail)
    assert ok, detail


def test_criterion_5_analytic_oracles(oracle_suites, criteria):
    disk = oracle_suites["disk"]
    strip = oracle_suites["strip"]
    exact = 0.5**2 / (4.0 * EPS)
    center = float(np.atleast_1d(disk.mrt.sample([(0.0, 0.0)]))[0])
    rel = abs(center - exact) / exact
    disk_ok = rel < 0.01
    d_up = abs(strip.escape_upper.average - 0.5)
    d_lo = abs(strip.escape_lower.average - 0.5)
    strip_ok = d_up <= 1e-6 and d_lo <= 1e-6
    ok = disk_ok and strip_ok
    detail = (
        f"disk MRT center {center:.4f} vs {exact:.1f} (rel err {rel:.2e}, gate 1e-2); "
        f"strip escape averages off 0.5 by {d_up:.1e} / {d_lo:.1e} (gate 1e-6)"
    )
    criteria(5, "pure-diffusion oracles: disk center MRT, strip average", ok, detail)
    assert ok, detail


def test_criterion_6_complementarity(beta_third_suites, oracle_suites, sweep_result, criteria):
    table, _, _ = sweep_result
    worst_avg = 0.0
    worst_field = 0.0
    for suite in list(beta_third_suites.values()) + list(oracle_suites.values()):
        s = suite.escape_upper.average + suite.escape_lower.average
        worst_avg = max(worst_avg, abs(s - 1.0))
        pt = np.abs(suite.escape_upper.field.values + suite.escape_lower.field.values - 1.0)
        worst_field = max(worst_field, float(pt.max()))
    issues = table.validate()  # row-level average sums over the whole sweep
    ok = worst_avg <= 2e-3 and worst_field <= 2.0 * SOLVER_RTOL and not issues
    detail = (
        f"worst average sum off by {worst_avg:.2e} (gate 2e-3) across 4 suites "
        f"and {len(table)} sweep rows; worst pointwise residual {worst_field:.2e} "
        f"(gate {2.0 * SOLVER_RTOL:.0e})"
    )
    if issues:
        detail += f"; sweep violations: {issues[:2]}"
    criteria(6, "complementary escape fields sum to one", ok, detail)
    assert ok, detail


def test_criterion_7_solver_vs_sampling(mc_validation, criteria):
    rc, report, elapsed = mc_validation
    doms = report["domains"]
    worst = {k: v["worst_z"] for k, v in doms.items()}
    conv = {k: v["dt_study"]["converged_dt"] for k, v in doms.items()}
    n_rows = {k: len(v["rows"]) for k, v in doms.items()}
    in_time = elapsed <= 20 * 60
    ok = (
        rc == 0
        and all(v is not None for v in conv.values())
        and all(n == 10 for n in n_rows.values())
        and in_time
    )
    detail = (
        f"worst |z| {', '.join(f'{k} {v:.2f}' for k, v in worst.items())} (gate 3); "
        f"dt converged from {', '.join(f'{k} {v:g}' for k, v in conv.items())}; "
        f"10^4 paths x {sum(n_rows.values())} probes in {elapsed:.0f}s (cap 1200s)"
    )
    criteria(7, "solver matches sampling at beta=1/3 (10 probes per domain)", ok, detail)
    assert ok, detail


def _mms_error(n_x, n_y):
    diff = 0.5
    dom = make_strip_domain(0.0, 2.0 * math.pi, -0.5, 0.5)
    mesh = mesh_jet_core(dom, n_x, n_y)
    cu, cl = MARKER_CODE[GAMMA_UPPER], MARKER_CODE[GAMMA_LOWER]

    def exact(x, y):
        return np.sin(x) * np.cos(y)

    def drift(x, y):
        return -np.sin(x) * np.cos(y), np.cos(x) * np.sin(y)

    def rhs(x, y):
        return 2.0 * diff * np.sin(x) * np.cos(y) + 0.5 * np.sin(2.0 * x)

    a_mat, b = fem.assemble_system(mesh, diff, velocity_fn=drift, rhs=rhs)
    red = fem.periodic_reduction(mesh)
    dofs, vals = fem.dirichlet_values(mesh, {cu: exact, cl: exact}, reduction=red)
    a_bc, b_bc = fem.apply_dirichlet(red.reduce_matrix(a_mat), red.reduce_vector(b), dofs, vals)
    return fem.l2_error(mesh, red.expand(fem.solve_linear(a_bc, b_bc)), exact)


def test_criterion_8_convergence(sweep_result, criteria):
    errs = [_mms_error(16, 8), _mms_error(32, 16), _mms_error(64, 32)]
    rates = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    order_ok = min(rates) >= 1.8
    table, _, _ = sweep_result
    stab = table.column("stability")[table.ok_rows()]
    stab_ok = np.isfinite(stab).all() and float(stab.max()) < 5e-3
    ok = order_ok and stab_ok
    detail = (
        f"manufactured-solution L2 rates {rates[0]:.2f}, {rates[1]:.2f} (gate 1.8); "
        f"sweep stability max {stab.max():.2e} over {stab.size} rows (gate 5e-3)"
    )
    criteria(8, "discretization order and between-mesh stability", ok, detail)
    assert ok, detail


def test_criterion_9_field_structure(beta_third_suites, criteria):
    depth = {"eddy": 0.08, "core": 0.3}
    bad = []
    svg_count = 0
    for name, suite in beta_third_suites.items():
        for sol, marker in (
            (suite.escape_upper, GAMMA_UPPER),
            (suite.escape_lower, GAMMA_LOWER),
        ):
            svg = field_svg(sol.field, domain=suite.domain, levels=np.linspace(0.0, 1.0, 11))
            ET.fromstring(svg)
            svg_count += 1
            rows = layering_profiles(sol.field, suite.domain, marker, depth=depth[name])
            # rays near eddy tips may leave the lens partway; judge the
            # finite run of each profile and insist it is long enough
            mono = 0
            for r in rows:
                vals = r[np.isfinite(r)]
                if vals.size >= 4 and np.all(np.diff(vals) < 0.0):
                    mono += 1
            if not (len(rows) and mono == len(rows)):
                bad.append(f"{name}/{marker}: {mono}/{len(rows)} profiles decrease inward")
        svg = field_svg(suite.mrt, domain=suite.domain)
        ET.fromstring(svg)
        svg_count += 1
        j = int(np.argmax(suite.mrt.values))
        if suite.mrt.mesh.vertex_markers[j] != 0:
            bad.append(f"{name}: residence-time maximum sits on the boundary")
    ok = not bad
    detail = (
        f"{svg_count} SVGs well formed; escape profiles decrease along every inward "
        f"normal and both residence maxima are interior"
        if ok
        else "; ".join(bad)
    )
    criteria(9, "layered escape contours and interior residence maxima", ok, detail)
    assert ok, detail
