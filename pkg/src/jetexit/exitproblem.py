"""Escape probabilities, residence times, and parameter sweeps.

This module glues the geometry, meshing, and solver layers together.
Given a beta it builds the recirculation-cell and channel domains,
solves the two complementary escape problems and the residence-time
problem on each, and aggregates the results over a beta grid into a
table that downstream feature finders (crossings, extrema, band
edges) consume.

Averages are plain P1 quadrature of the nodal field divided by the
spline area of the domain, so the complementary pair sums to the
ratio of triangulated to exact area rather than exactly one.  That
defect shrinks like h^2 and stays far inside the 2e-3 acceptance
band at the default resolutions.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import fem
from .domains import (
    GAMMA_LOWER,
    GAMMA_UPPER,
    KIND_EDDY,
    MARKER_CODE,
    DomainSpec,
    build_eddy_domain,
    build_jet_core_domain,
)
from .errors import (
    CrossingStructureError,
    ExtremumStructureError,
    JetExitError,
    ParameterError,
    SolverError,
)
from .flowfield import JetParameters, make_params, velocity_fn
from .meshing import mesh_eddy, mesh_jet_core, refine_uniform

SOLVER_RTOL = 1e-10
STABILIZATION = "streamline_diffusion"

BETA_LO = 1e-3
BETA_HI = 2.0 / 3.0 - 1e-3

SWEEP_COLUMNS = (
    "beta",
    "p_eddy_upper",
    "p_eddy_lower",
    "p_core_upper",
    "p_core_lower",
    "max_mrt_eddy",
    "max_mrt_core",
)


@dataclass(frozen=True)
class Resolution:
    """Mesh sizing: base grid per domain kind plus uniform refinements.

    ``eddy`` is (n_radial, n_angular) for the polar mesh, ``core`` is
    (n_x, n_y) for the channel mesh.  ``refinements`` 4-folds the
    triangle count each time; solutions on the last two levels feed
    the convergence gate.
    """

    eddy: tuple = (24, 160)
    core: tuple = (96, 40)
    refinements: int = 1

    def to_dict(self):
        return {
            "eddy": list(self.eddy),
            "core": list(self.core),
            "refinements": self.refinements,
        }


@dataclass
class ExitSolution:
    """One escape solve: which boundary absorbs, the field, its average."""

    domain: DomainSpec
    gamma: str
    field: fem.ScalarField
    average: float
    stability: float = math.nan
    beta: float = math.nan


@dataclass
class DomainSuite:
    """All three solves on one domain, sharing mesh and factorization."""

    domain: DomainSpec
    escape_upper: ExitSolution
    escape_lower: ExitSolution
    mrt: fem.ScalarField
    mrt_max: float
    mrt_argmax: tuple
    mrt_average: float
    stability: float


def _annotate(err, kind, beta):
    if err.args and isinstance(err.args[0], str):
        err.args = (f"[{kind}, beta={beta:.6g}] {err.args[0]}",) + err.args[1:]
    return err


def _mesh_levels(domain, resolution):
    if domain.kind == KIND_EDDY:
        mesh = mesh_eddy(domain, *resolution.eddy)
    else:
        mesh = mesh_jet_core(domain, *resolution.core)
    levels = [mesh]
    for _ in range(resolution.refinements):
        levels.append(refine_uniform(levels[-1], domain))
    return levels


def _drift_for(p, domain, drift):
    if drift == "auto":
        return None if domain.synthetic is not None else velocity_fn(p)
    return drift


def _solve_three(mesh, diffusion, drift):
    """Escape-up, escape-down, and residence fields on one mesh.

    The three problems share the stiffness matrix and the constrained
    dof set, so one factorization serves three right-hand sides.
    """
    a_mat, b0 = fem.assemble_system(mesh, diffusion, velocity_fn=drift, rhs=0.0)
    _, b1 = fem.assemble_system(mesh, diffusion, velocity_fn=drift, rhs=1.0)
    red = None
    if len(mesh.periodic_pairs):
        red = fem.periodic_reduction(mesh)
        a_mat = red.reduce_matrix(a_mat)
        b0 = red.reduce_vector(b0)
        b1 = red.reduce_vector(b1)

    cu, cl = MARKER_CODE[GAMMA_UPPER], MARKER_CODE[GAMMA_LOWER]
    dofs, val_up = fem.dirichlet_values(mesh, {cu: 1.0, cl: 0.0}, reduction=red)
    _, val_lo = fem.dirichlet_values(mesh, {cu: 0.0, cl: 1.0}, reduction=red)
    zeros = np.zeros_like(val_up)

    a_bc, rhs_up = fem.apply_dirichlet(a_mat, b0, dofs, val_up)
    _, rhs_lo = fem.apply_dirichlet(a_mat, b0, dofs, val_lo)
    _, rhs_t = fem.apply_dirichlet(a_mat, b1, dofs, zeros)

    sols = fem.solve_linear_multi(a_bc, [rhs_up, rhs_lo, rhs_t], rtol=SOLVER_RTOL)
    if red is not None:
        sols = [red.expand(x) for x in sols]
    return sols


def solve_domain_suite(p, domain, resolution=None, drift="auto"):
    """Both escape problems and the residence time on one domain.

    With ``resolution.refinements`` >= 1 the suite also solves on the
    next-coarser level and records the worst change across the three
    summary numbers as ``stability`` (absolute for the probabilities,
    relative for the residence-time maximum).
    """
    resolution = resolution or Resolution()
    drift = _drift_for(p, domain, drift)
    try:
        levels = _mesh_levels(domain, resolution)
        per_level = []
        for mesh in levels[-2:]:
            fields = _solve_three(mesh, p.epsilon, drift)
            avgs = [fem.integrate(mesh, f) / domain.area for f in fields[:2]]
            per_level.append((mesh, fields, avgs))
    except JetExitError as err:
        raise _annotate(err, domain.kind, p.beta)

    mesh, (f_up, f_lo, f_t), (avg_up, avg_lo) = per_level[-1]

    for tag, avg in ((GAMMA_UPPER, avg_up), (GAMMA_LOWER, avg_lo)):
        if not -1e-6 <= avg <= 1.0 + 1e-6:
            raise _annotate(
                SolverError(f"escape average through {tag} is {avg:.6g}, outside [0, 1]"),
                domain.kind,
                p.beta,
            )
    if f_t.min() < -1e-8:
        raise _annotate(
            SolverError(f"residence time reaches {f_t.min():.3e} below zero"),
            domain.kind,
            p.beta,
        )
    interior = mesh.vertex_markers == 0
    if interior.any() and f_t[interior].min() <= 0.0:
        raise _annotate(
            SolverError("residence time is not strictly positive in the interior"),
            domain.kind,
            p.beta,
        )

    mrt_max = float(f_t.max())
    stability = math.nan
    if len(per_level) == 2:
        (m0, fields0, avgs0) = per_level[0]
        drift_p = abs(avgs0[0] - avg_up), abs(avgs0[1] - avg_lo)
        mrt0 = float(fields0[2].max())
        drift_t = abs(mrt0 - mrt_max) / max(mrt_max, 1e-30)
        stability = max(*drift_p, drift_t)

    j = int(np.argmax(f_t))
    suite = DomainSuite(
        domain=domain,
        escape_upper=ExitSolution(
            domain, GAMMA_UPPER, fem.ScalarField(mesh, f_up, name="escape_upper"),
            avg_up, stability, p.beta,
        ),
        escape_lower=ExitSolution(
            domain, GAMMA_LOWER, fem.ScalarField(mesh, f_lo, name="escape_lower"),
            avg_lo, stability, p.beta,
        ),
        mrt=fem.ScalarField(mesh, f_t, name="residence_time"),
        mrt_max=mrt_max,
        mrt_argmax=tuple(mesh.vertices[j]),
        mrt_average=float(fem.integrate(mesh, f_t)) / domain.area,
        stability=stability,
    )
    return suite


def solve_escape(p, domain, gamma, resolution=None, drift="auto"):
    """Escape probability through ``gamma`` (a marker name) on ``domain``."""
    if gamma not in (GAMMA_UPPER, GAMMA_LOWER):
        raise ParameterError(f"unknown boundary marker {gamma!r}")
    suite = solve_domain_suite(p, domain, resolution, drift)
    return suite.escape_upper if gamma == GAMMA_UPPER else suite.escape_lower


def solve_mrt(p, domain, resolution=None, drift="auto"):
    """Mean residence time field on ``domain`` (zero on the whole boundary)."""
    suite = solve_domain_suite(p, domain, resolution, drift)
    out = suite.mrt
    out.meta = {
        "max": suite.mrt_max,
        "argmax": list(suite.mrt_argmax),
        "average": suite.mrt_average,
        "stability": suite.stability,
        "beta": p.beta,
    }
    return out


# ---------------------------------------------------------------------------
# beta sweep


def _blank_row(beta):
    row = {name: math.nan for name in SWEEP_COLUMNS}
    row["beta"] = float(beta)
    row["stability"] = math.nan
    row["error"] = ""
    return row


def _sweep_row(args):
    beta, resolution, phase = args
    row = _blank_row(beta)
    try:
        p = make_params(beta)
        eddy = build_eddy_domain(p)
        core = build_jet_core_domain(p, phase=phase)
    except JetExitError as err:
        row["error"] = f"geometry: {type(err).__name__}: {err}"
        return row
    stab = []
    for dom, up_col, lo_col, mrt_col in (
        (eddy, "p_eddy_upper", "p_eddy_lower", "max_mrt_eddy"),
        (core, "p_core_upper", "p_core_lower", "max_mrt_core"),
    ):
        try:
            suite = solve_domain_suite(p, dom, resolution)
        except JetExitError as err:
            row["error"] += f"{'; ' if row['error'] else ''}{type(err).__name__}: {err}"
            continue
        row[up_col] = suite.escape_upper.average
        row[lo_col] = suite.escape_lower.average
        row[mrt_col] = suite.mrt_max
        stab.append(suite.stability)
    if stab:
        row["stability"] = max(stab)
    return row


class SweepTable:
    """Rows of escape averages and residence maxima over a beta grid."""

    def __init__(self, rows, meta=None):
        self.rows = sorted(rows, key=lambda r: r["beta"])
        self.meta = dict(meta or {})

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        return np.array([r.get(name, math.nan) for r in self.rows], dtype=float)

    @property
    def betas(self):
        return self.column("beta")

    def ok_rows(self):
        return np.array([not r.get("error") for r in self.rows])

    def restrict(self, lo=-np.inf, hi=np.inf):
        rows = [r for r in self.rows if lo <= r["beta"] <= hi]
        return SweepTable(rows, self.meta)

    def validate(self):
        """Invariant violations as human-readable strings (empty = clean)."""
        issues = []
        b = self.betas
        if np.any(np.diff(b) <= 0):
            issues.append("beta grid is not strictly increasing")
        if b.size and (b[0] < 0.0 or b[-1] > 2.0 / 3.0):
            issues.append("beta grid leaves [0, 2/3]")
        for r in self.rows:
            if r.get("error"):
                continue
            for a, c in (("p_eddy_upper", "p_eddy_lower"), ("p_core_upper", "p_core_lower")):
                s = r[a] + r[c]
                if not math.isnan(s) and abs(s - 1.0) > 2e-3:
                    issues.append(f"beta={r['beta']:.4f}: {a}+{c} = {s:.6f}")
        return issues

    @classmethod
    def from_columns(cls, beta, **columns):
        rows = []
        for i, b in enumerate(np.asarray(beta, dtype=float)):
            row = _blank_row(b)
            for name, vals in columns.items():
                row[name] = float(np.asarray(vals, dtype=float)[i])
            rows.append(row)
        return cls(rows)

    # -- persistence --------------------------------------------------------

    def _field_names(self):
        return list(SWEEP_COLUMNS) + ["stability", "error"]

    def to_csv_text(self):
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=self._field_names(), lineterminator="\n")
        writer.writeheader()
        for r in self.rows:
            out = {}
            for name in self._field_names():
                v = r.get(name, "")
                out[name] = repr(float(v)) if isinstance(v, float) else v
            writer.writerow(out)
        return buf.getvalue()

    def save(self, path):
        """Write the CSV and a JSON metadata sidecar next to it."""
        path = str(path)
        with open(path, "w") as fh:
            fh.write(self.to_csv_text())
        sidecar = dict(self.meta)
        sidecar["columns"] = self._field_names()
        sidecar["n_rows"] = len(self.rows)
        with open(path + ".meta.json", "w") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        path = str(path)
        rows = []
        with open(path) as fh:
            for rec in csv.DictReader(fh):
                row = {}
                for k, v in rec.items():
                    if k == "error":
                        row[k] = v
                    else:
                        row[k] = float(v) if v not in ("", None) else math.nan
                rows.append(row)
        meta = {}
        try:
            with open(path + ".meta.json") as fh:
                meta = json.load(fh)
        except FileNotFoundError:
            pass
        return cls(rows, meta)


def config_hash(payload):
    """Short content hash of a configuration mapping, git style."""
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _worker_count(workers, n_jobs):
    if workers is None:
        workers = 1
    cap = os.environ.get("JETEXIT_THREADS")
    if cap:
        workers = min(workers, max(1, int(cap)))
    return max(1, min(workers, n_jobs))


def sweep_beta(betas, resolution=None, phase="trough", workers=None):
    """Solve every beta on the grid; failures land in the row, not the run."""
    betas = np.asarray(betas, dtype=float)
    if betas.ndim != 1 or betas.size == 0:
        raise ParameterError("beta grid must be a nonempty 1-d sequence")
    if np.any(np.diff(betas) <= 0):
        raise ParameterError("beta grid must be strictly increasing")
    if betas[0] < 0.0 or betas[-1] > 2.0 / 3.0:
        raise ParameterError("beta grid must stay inside [0, 2/3]")
    betas = np.clip(betas, BETA_LO, BETA_HI)

    resolution = resolution or Resolution()
    jobs = [(float(b), resolution, phase) for b in betas]
    n_workers = _worker_count(workers, len(jobs))
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            rows = list(pool.map(_sweep_row, jobs))
    else:
        rows = [_sweep_row(j) for j in jobs]

    meta = {
        "grid": [float(b) for b in betas],
        "phase": phase,
        "resolution": resolution.to_dict(),
        "stabilization": STABILIZATION,
        "solver_rtol": SOLVER_RTOL,
    }
    meta["config_hash"] = config_hash(meta)
    return SweepTable(rows, meta)


def default_beta_grid(n_points=28, lo=0.01, hi=0.65):
    return np.linspace(lo, hi, n_points)


def refine_grid_near(table, features, step=0.01, span=3):
    """Extra betas at ``step`` spacing around detected feature locations."""
    have = table.betas
    extra = []
    for f in features:
        if f is None or math.isnan(f):
            continue
        for m in range(-span, span + 1):
            b = f + m * step
            if b < BETA_LO or b > BETA_HI:
                continue
            if np.min(np.abs(have - b)) < step / 2 - 1e-12:
                continue
            if extra and min(abs(b - e) for e in extra) < 1e-9:
                continue
            extra.append(b)
    return np.array(sorted(set(np.round(extra, 12))))


def merge_tables(base, extra):
    rows = {round(r["beta"], 12): r for r in base.rows}
    for r in extra.rows:
        rows[round(r["beta"], 12)] = r
    meta = dict(base.meta)
    meta["grid"] = sorted(set(meta.get("grid", [])) | {r["beta"] for r in extra.rows})
    return SweepTable(list(rows.values()), meta)


# ---------------------------------------------------------------------------
# feature finders


def _sign_pattern(values):
    return "".join("+" if v > 0 else "-" if v < 0 else "0" for v in values)


def _finite_rows(table, *cols):
    mask = table.ok_rows()
    for c in cols:
        mask &= np.isfinite(table.column(c))
    if mask.sum() < 2:
        raise CrossingStructureError(
            f"table has {int(mask.sum())} usable rows for columns {cols}"
        )
    return table.betas[mask], [table.column(c)[mask] for c in cols]


def find_crossing(table, col_a, col_b, offset=0.0, lo=-np.inf, hi=np.inf, tol=1e-6):
    """Beta where ``col_a - col_b`` crosses ``offset``, on [lo, hi].

    The difference must change sign exactly once over the restricted
    grid.  A monotone cubic interpolant of the difference is bisected
    until it is smaller than ``tol``.
    """
    sub = table.restrict(lo, hi)
    beta, (a, b) = _finite_rows(sub, col_a, col_b)
    d = a - b - offset

    zeros = np.flatnonzero(d == 0.0)
    s = np.sign(d)
    nz = s[s != 0]
    flips = int(np.count_nonzero(np.diff(nz) != 0))
    if flips != 1 or len(zeros) > 1:
        raise CrossingStructureError(
            f"{col_a} - {col_b} - {offset:g} changes sign {flips} times "
            f"over [{beta[0]:.4g}, {beta[-1]:.4g}] (pattern {_sign_pattern(d)})"
        )
    if len(zeros) == 1:
        return float(beta[zeros[0]])

    curve = PchipInterpolator(beta, d)
    i = int(np.flatnonzero(np.diff(s) != 0)[0])
    left, right = beta[i], beta[i + 1]
    f_left = d[i]
    mid = 0.5 * (left + right)
    for _ in range(200):
        f_mid = float(curve(mid))
        if abs(f_mid) < tol:
            break
        if (f_mid > 0) == (f_left > 0):
            left, f_left = mid, f_mid
        else:
            right = mid
        mid = 0.5 * (left + right)
    else:
        raise CrossingStructureError("bisection failed to reach tolerance")
    return float(mid)


def find_band_edges(table, col_a, col_b, width=0.05):
    """Betas where |col_a - col_b| falls through / climbs past ``width``.

    The difference is assumed to start above +width, dwell inside the
    band, and leave below -width; the two threshold crossings bound
    the near-equality band.
    """
    beta, (a, b) = _finite_rows(table, col_a, col_b)
    d = a - b
    inside = np.abs(d) < width
    if not inside.any():
        raise CrossingStructureError(
            f"|{col_a} - {col_b}| never drops below {width:g} "
            f"(min {np.abs(d).min():.4g})"
        )
    if np.abs(d).max() <= width:
        raise CrossingStructureError(
            f"|{col_a} - {col_b}| stays below {width:g} over the whole grid "
            f"(max {np.abs(d).max():.4g}); the band has no edges"
        )
    pivot = float(beta[np.argmin(np.abs(d))])
    lo_edge = find_crossing(table, col_a, col_b, offset=width, hi=pivot)
    hi_edge = find_crossing(table, col_a, col_b, offset=-width, lo=pivot)
    return lo_edge, hi_edge


def find_extremum(table, col):
    """Beta of the interior extremum of ``col`` (parabolic refinement).

    The column must rise then fall (peak) or fall then rise (valley)
    with no ties; anything else raises.
    """
    beta, (v,) = _finite_rows(table, col)
    dv = np.diff(v)
    s = np.sign(dv)
    if np.any(s == 0):
        j = int(np.flatnonzero(s == 0)[0])
        raise ExtremumStructureError(
            f"{col} has a tie at beta={beta[j]:.4g}..{beta[j + 1]:.4g}"
        )
    flips = np.flatnonzero(np.diff(s) != 0)
    if len(flips) != 1:
        raise ExtremumStructureError(
            f"{col} is not unimodal (sign pattern of differences: {_sign_pattern(dv)})"
        )
    i = int(flips[0]) + 1  # index of the extremal grid point
    x0, x1, x2 = beta[i - 1], beta[i], beta[i + 1]
    y0, y1, y2 = v[i - 1], v[i], v[i + 1]
    num = (x1 - x0) ** 2 * (y1 - y2) - (x1 - x2) ** 2 * (y1 - y0)
    den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0)
    if den == 0:
        return float(x1)
    return float(x1 - 0.5 * num / den)


@dataclass
class MonotonicityVerdict:
    direction: str  # increasing | decreasing | neither
    violation: tuple | None = None  # ((beta_i, v_i), (beta_j, v_j))
    ties: list = field(default_factory=list)

    def __bool__(self):
        return self.direction != "neither"


def monotonicity_check(table, col):
    """Strict monotonicity of a fully populated column."""
    beta, (v,) = _finite_rows(table, col)
    dv = np.diff(v)
    ties = [
        ((float(beta[i]), float(v[i])), (float(beta[i + 1]), float(v[i + 1])))
        for i in np.flatnonzero(dv == 0)
    ]
    if np.all(dv > 0):
        return MonotonicityVerdict("increasing")
    if np.all(dv < 0):
        return MonotonicityVerdict("decreasing")
    up = int(np.count_nonzero(dv > 0))
    down = int(np.count_nonzero(dv < 0))
    bad = np.flatnonzero(dv <= 0) if up >= down else np.flatnonzero(dv >= 0)
    j = int(bad[0])
    violation = ((float(beta[j]), float(v[j])), (float(beta[j + 1]), float(v[j + 1])))
    return MonotonicityVerdict("neither", violation=violation, ties=ties)


# ---------------------------------------------------------------------------
# the full default pipeline


def detect_features(table):
    """All paper-level features of a sweep table; failures become None."""
    out = {}

    def attempt(key, fn):
        try:
            out[key] = fn()
        except (CrossingStructureError, ExtremumStructureError) as err:
            out[key] = None
            out.setdefault("errors", {})[key] = str(err)

    attempt("crossing_eddy", lambda: find_crossing(table, "p_eddy_lower", "p_eddy_upper"))
    attempt("band_core", lambda: find_band_edges(table, "p_core_upper", "p_core_lower"))
    attempt("peak_p_eddy_lower", lambda: find_extremum(table, "p_eddy_lower"))
    attempt("peak_max_mrt_eddy", lambda: find_extremum(table, "max_mrt_eddy"))
    try:
        out["mrt_core_monotonic"] = monotonicity_check(table, "max_mrt_core").direction
    except CrossingStructureError as err:
        out["mrt_core_monotonic"] = None
        out.setdefault("errors", {})["mrt_core_monotonic"] = str(err)
    return out


def run_default_sweep(resolution=None, phase="trough", workers=None, n_points=28):
    """Base grid sweep, local refinement near features, final feature pass."""
    table = sweep_beta(default_beta_grid(n_points), resolution, phase, workers)
    features = detect_features(table)
    spots = []
    for key in ("crossing_eddy", "peak_p_eddy_lower", "peak_max_mrt_eddy"):
        spots.append(features.get(key))
    band = features.get("band_core")
    if band:
        spots.extend(band)
    extra = refine_grid_near(table, spots)
    if extra.size:
        table = merge_tables(table, sweep_beta(extra, resolution, phase, workers))
        features = detect_features(table)
    table.meta["features"] = _features_json(features)
    return table, features


def _features_json(features):
    out = {}
    for k, v in features.items():
        if isinstance(v, tuple):
            out[k] = list(v)
        else:
            out[k] = v
    return out
