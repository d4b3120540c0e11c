"""Separatrix-bounded domains of the meandering jet.

Two physical domain kinds are built from the flow geometry:

* the southern-row recirculating eddy over one zonal period, bounded by
  the two separatrix branches through its end saddles (``gamma_upper``
  toward the jet core, ``gamma_lower`` toward the exterior retrograde
  region), and
* one periodic cell of the jet core, bounded above by the northern
  separatrix chain and below by the southern one, cut by periodic sides
  one period apart.

Every chain is a graph over x between adjacent saddles: between the two
critical lines u = 0 the stream function is strictly monotone in y, so
each boundary ordinate is found by a bracketed 1-D root solve, with the
saddle endpoints inserted exactly.  Synthetic ellipse / strip domains
with the same interface back the analytic test problems.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import GeometryError, MarkerError, ParameterError
from .flowfield import JetParameters, stream_function, velocity
from .geometry import SeparatrixCurve, critical_ordinate

GAMMA_UPPER = "gamma_upper"
GAMMA_LOWER = "gamma_lower"
MARKERS = (GAMMA_UPPER, GAMMA_LOWER)
MARKER_CODE = {GAMMA_UPPER: 1, GAMMA_LOWER: 2}
CODE_MARKER = {1: GAMMA_UPPER, 2: GAMMA_LOWER}

KIND_EDDY = "eddy"
KIND_JET_CORE = "jet_core"


@dataclass
class BoundarySegment:
    """One smooth boundary piece with its Dirichlet marker."""

    name: str
    marker: str
    curve: SeparatrixCurve


@dataclass
class DomainSpec:
    """A meshable plane domain with marked boundary segments.

    Physical domains carry the jet parameters and the separatrix levels
    of their boundary chains; synthetic domains carry an analytic
    descriptor instead.  Numeric hooks (inside test, boundary rays,
    projections) are attached at construction / load time and are not
    serialized.
    """

    kind: str
    segments: list[BoundarySegment]
    area: float
    params: JetParameters | None = None
    phase: str | None = None
    center: tuple | None = None
    x_range: tuple | None = None
    period: float | None = None
    levels: dict = field(default_factory=dict)
    saddles: list = field(default_factory=list)
    saddle_cols: dict = field(default_factory=dict)
    ref_axes: tuple | None = None
    synthetic: dict | None = None

    # runtime hooks
    _inside_fn: object = field(default=None, repr=False, compare=False)
    _classify_fn: object = field(default=None, repr=False, compare=False)
    _boundary_y_fn: object = field(default=None, repr=False, compare=False)
    _ray_fn: object = field(default=None, repr=False, compare=False)
    _project_fn: object = field(default=None, repr=False, compare=False)
    _mc_spec: dict | None = field(default=None, repr=False, compare=False)

    # -- queries ----------------------------------------------------------

    def inside_values(self, x, y):
        """Signed level function: positive inside, vanishing linearly on the boundary."""
        return self._inside_fn(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def exit_markers(self, x, y):
        """Marker codes (1 = gamma_upper, 2 = gamma_lower) for points at/near the boundary."""
        return self._classify_fn(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def contains(self, x, y):
        """Strict inside test, restricted to this window for periodic kinds."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ok = self.inside_values(x, y) > 0.0
        if self.x_range is not None:
            lo, hi = self.x_range
            ok = ok & (x >= lo) & (x <= hi)
        return ok

    def boundary_y(self, x, marker):
        """Boundary ordinate under/over abscissa x (graph-over-x kinds)."""
        if self._boundary_y_fn is None:
            raise GeometryError(f"domain kind {self.kind!r} has no y(x) boundary query")
        return self._boundary_y_fn(float(x), marker)

    def boundary_by_reference_angle(self, phis):
        """Boundary points hit by rays from the center (eddy kinds).

        ``phis`` are reference-ellipse angles; the ray direction of angle
        phi is atan2(ry*sin(phi), rx*cos(phi)) so that for a true ellipse
        the returned point is exactly (cx + rx*cos(phi), cy + ry*sin(phi)).
        """
        if self._ray_fn is None:
            raise GeometryError(f"domain kind {self.kind!r} has no center-ray boundary query")
        return self._ray_fn(np.atleast_1d(np.asarray(phis, dtype=float)))

    def project_to_boundary(self, points, marker):
        """Project points onto the marked boundary (used by mesh refinement)."""
        return self._project_fn(np.asarray(points, dtype=float), marker)

    def marker_level(self, marker):
        if marker not in self.levels:
            raise MarkerError(f"unknown marker {marker!r}")
        return self.levels[marker]

    def segments_for(self, marker):
        segs = [s for s in self.segments if s.marker == marker]
        if not segs:
            raise MarkerError(f"no boundary segment carries marker {marker!r}")
        return segs

    def bbox(self):
        pts = np.vstack([s.curve.points for s in self.segments])
        return (
            float(pts[:, 0].min()),
            float(pts[:, 0].max()),
            float(pts[:, 1].min()),
            float(pts[:, 1].max()),
        )

    def mc_spec(self):
        """Kernel tag and constants for the Monte Carlo simulator."""
        if self._mc_spec is None:
            raise GeometryError(f"domain {self.kind!r} has no Monte Carlo kernel")
        return self._mc_spec

    # -- serialization -----------------------------------------------------

    def to_dict(self):
        return {
            "kind": self.kind,
            "phase": self.phase,
            "params": None
            if self.params is None
            else {
                "beta": self.params.beta,
                "a": self.params.a,
                "c": self.params.c,
                "k": self.params.k,
                "epsilon": self.params.epsilon,
            },
            "synthetic": self.synthetic,
            "center": None if self.center is None else list(self.center),
            "x_range": None if self.x_range is None else list(self.x_range),
            "period": self.period,
            "area": self.area,
            "levels": {m: self.levels.get(m) for m in MARKERS if m in self.levels},
            "saddles": [list(s) for s in self.saddles],
            "saddle_cols": {m: list(v) for m, v in self.saddle_cols.items()},
            "ref_axes": None if self.ref_axes is None else list(self.ref_axes),
            "segments": [
                {
                    "name": s.name,
                    "marker": s.marker,
                    "closed": bool(s.curve.closed),
                    "level": s.curve.level,
                    "points": s.curve.points.tolist(),
                }
                for s in self.segments
            ],
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f)

    @classmethod
    def from_dict(cls, doc):
        params = doc.get("params")
        if params is not None:
            params = JetParameters(**params)
        segments = [
            BoundarySegment(
                name=s["name"],
                marker=s["marker"],
                curve=SeparatrixCurve(
                    points=np.asarray(s["points"], dtype=float),
                    level=s["level"],
                    closed=s["closed"],
                ),
            )
            for s in doc["segments"]
        ]
        dom = cls(
            kind=doc["kind"],
            segments=segments,
            area=float(doc["area"]),
            params=params,
            phase=doc.get("phase"),
            center=None if doc.get("center") is None else tuple(doc["center"]),
            x_range=None if doc.get("x_range") is None else tuple(doc["x_range"]),
            period=doc.get("period"),
            levels=dict(doc.get("levels") or {}),
            saddles=[tuple(s) for s in doc.get("saddles", [])],
            saddle_cols={m: tuple(v) for m, v in (doc.get("saddle_cols") or {}).items()},
            ref_axes=None if doc.get("ref_axes") is None else tuple(doc["ref_axes"]),
            synthetic=doc.get("synthetic"),
        )
        if dom.synthetic is not None:
            _attach_synthetic_hooks(dom)
        elif dom.params is not None:
            _attach_jet_hooks(dom)
        return dom

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))


# ---------------------------------------------------------------------------
# root-solve helpers


def _cheb_nodes(lo: float, hi: float, n: int) -> np.ndarray:
    """Chebyshev-clustered abscissas on [lo, hi], endpoints exact, ascending."""
    j = np.arange(n)
    x = lo + (hi - lo) * 0.5 * (np.cos(np.pi * j / (n - 1))[::-1] + 1.0)
    x[0] = lo
    x[-1] = hi
    return x


def _channel_root(p: JetParameters, x: float, level: float) -> float:
    """Ordinate where Psi(x, .) = level between the two critical lines.

    Psi is strictly decreasing in y there (u > 0), so the root is unique.
    Fails (by construction) only on a saddle column of this level, where
    callers insert the saddle ordinate exactly.
    """
    ya = critical_ordinate(p, x, "south")
    yb = critical_ordinate(p, x, "north")

    def f(y):
        return float(stream_function(p, x, y)) - level

    fa, fb = f(ya), f(yb)
    if fa <= 0.0 or fb >= 0.0:
        raise GeometryError(
            f"channel bracket failed at x={x!r}, level={level!r} (fa={fa:.3e}, fb={fb:.3e})"
        )
    return float(brentq(f, ya, yb, xtol=1e-13, rtol=8.9e-16))


def _under_root(p: JetParameters, x: float, level: float) -> float:
    """Ordinate where Psi(x, .) = level below the southern critical line."""
    ya = critical_ordinate(p, x, "south")
    y_floor = (level - 1.05) / p.c  # Psi ~ 1 + c*y below the jet
    while float(stream_function(p, x, y_floor)) >= level:
        y_floor -= 0.5
        if y_floor < -20.0:
            raise GeometryError(f"no lower-branch bracket at x={x!r}")

    def f(y):
        return float(stream_function(p, x, y)) - level

    if f(ya) <= 0.0:
        raise GeometryError(f"lower-branch bracket failed at x={x!r}")
    return float(brentq(f, y_floor, ya, xtol=1e-13, rtol=8.9e-16))


def _chain_points(p, level, x_lo, x_hi, n, root, y_lo_exact=None, y_hi_exact=None):
    xs = _cheb_nodes(x_lo, x_hi, n)
    ys = np.empty_like(xs)
    for j, x in enumerate(xs):
        if j == 0 and y_lo_exact is not None:
            ys[j] = y_lo_exact
        elif j == n - 1 and y_hi_exact is not None:
            ys[j] = y_hi_exact
        else:
            ys[j] = root(p, x, level)
    return np.column_stack([xs, ys])


def _newton_to_level(p: JetParameters, pts, level, tol=1e-12, iters=60):
    """Project points onto {Psi = level} along grad Psi (vectorized Newton)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    x = pts[:, 0].copy()
    y = pts[:, 1].copy()
    for _ in range(iters):
        r = stream_function(p, x, y) - level
        act = np.abs(r) >= tol  # converged points must not move (grad ~ 0 at saddles)
        if not act.any():
            break
        u, v = velocity(p, x, y)
        gx, gy = v, -u  # grad Psi
        g2 = np.maximum(gx * gx + gy * gy, 1e-30)
        x = np.where(act, x - r * gx / g2, x)
        y = np.where(act, y - r * gy / g2, y)
    return np.column_stack([x, y])


# ---------------------------------------------------------------------------
# physical domain builders


def build_eddy_domain(p: JetParameters, n_boundary: int = 201) -> DomainSpec:
    """Southern-row recirculating eddy over one zonal period.

    The eddy is centered on the stagnation center at x = 0 and bounded by
    the separatrix level through its two end saddles at x = +-pi/k; the
    upper branch borders the jet core, the lower branch the exterior
    retrograde region.
    """
    k = p.k
    x_sad = math.pi / k
    y_sad = critical_ordinate(p, x_sad, "south")
    lev_e = float(stream_function(p, x_sad, y_sad))
    lev_w = float(stream_function(p, -x_sad, y_sad))
    if abs(lev_e - lev_w) > 1e-9:
        warnings.warn(
            f"eddy saddle levels differ by {abs(lev_e - lev_w):.3e}; using their mean",
            stacklevel=2,
        )
    level = 0.5 * (lev_e + lev_w)
    y_cen = critical_ordinate(p, 0.0, "south")
    margin = float(stream_function(p, 0.0, y_cen)) - level
    if margin <= 0.0:
        raise GeometryError(f"southern eddy is degenerate at beta={p.beta!r}")

    upper = _chain_points(
        p, level, -x_sad, x_sad, n_boundary, _channel_root, y_lo_exact=y_sad, y_hi_exact=y_sad
    )
    lower = _chain_points(
        p, level, -x_sad, x_sad, n_boundary, _under_root, y_lo_exact=y_sad, y_hi_exact=y_sad
    )

    up_curve = SeparatrixCurve(points=upper, level=level)
    lo_curve = SeparatrixCurve(points=lower, level=level)
    area = lo_curve.spline.area_term() - up_curve.spline.area_term()
    if area <= 0.0:
        raise GeometryError("eddy boundary orientation produced a non-positive area")

    center = (0.0, y_cen)
    ry_up = float(upper[:, 1].max()) - y_cen
    ry_down = y_cen - float(lower[:, 1].min())
    if ry_up <= 0.0 or ry_down <= 0.0:
        raise GeometryError("eddy center does not sit between its boundary branches")

    dom = DomainSpec(
        kind=KIND_EDDY,
        segments=[
            BoundarySegment("upper", GAMMA_UPPER, up_curve),
            BoundarySegment("lower", GAMMA_LOWER, lo_curve),
        ],
        area=float(area),
        params=p,
        center=center,
        x_range=(-x_sad, x_sad),
        period=p.period,
        levels={GAMMA_UPPER: level, GAMMA_LOWER: level},
        saddles=[(-x_sad, y_sad), (x_sad, y_sad)],
        ref_axes=(x_sad, ry_up, ry_down),
    )
    _attach_jet_hooks(dom)
    return dom


def build_jet_core_domain(
    p: JetParameters, phase: str = "trough", n_boundary: int = 201
) -> DomainSpec:
    """One periodic cell of the jet core.

    The window spans one zonal period with the chosen meander phase at
    its middle: ``trough`` -> [0, 2pi/k], ``crest`` -> [pi/k, 3pi/k].
    Where a chain passes through a saddle interior to the window it is
    split into two spline segments meeting exactly at the saddle.
    """
    k = p.k
    per = p.period
    xh = math.pi / k
    y_n = critical_ordinate(p, 0.0, "north")
    lev_up = float(stream_function(p, 0.0, y_n))
    y_s = critical_ordinate(p, xh, "south")
    lev_low = float(stream_function(p, xh, y_s))
    if not lev_up < lev_low:
        raise GeometryError(f"jet-core band is empty at beta={p.beta!r}")

    if phase == "trough":
        x_lo = 0.0
        upper_spans = [("upper", 0.0, per, y_n, y_n)]
        lower_spans = [
            ("lower_west", 0.0, xh, None, y_s),
            ("lower_east", xh, per, y_s, None),
        ]
    elif phase == "crest":
        x_lo = xh
        upper_spans = [
            ("upper_west", xh, per, None, y_n),
            ("upper_east", per, per + xh, y_n, None),
        ]
        lower_spans = [("lower", xh, per + xh, y_s, y_s)]
    else:
        raise ParameterError(f"phase must be 'trough' or 'crest', got {phase!r}")
    x_hi = x_lo + per

    # interior points per segment, proportional to span length
    def n_for(lo, hi):
        return max(31, int(round(n_boundary * (hi - lo) / per)))

    segments = []
    for name, lo, hi, ylo, yhi in upper_spans:
        pts = _chain_points(p, lev_up, lo, hi, n_for(lo, hi), _channel_root, ylo, yhi)
        segments.append(BoundarySegment(name, GAMMA_UPPER, SeparatrixCurve(pts, lev_up)))
    for name, lo, hi, ylo, yhi in lower_spans:
        pts = _chain_points(p, lev_low, lo, hi, n_for(lo, hi), _channel_root, ylo, yhi)
        segments.append(BoundarySegment(name, GAMMA_LOWER, SeparatrixCurve(pts, lev_low)))

    upper_segs = [s for s in segments if s.marker == GAMMA_UPPER]
    lower_segs = [s for s in segments if s.marker == GAMMA_LOWER]
    y_up_lo = upper_segs[0].curve.points[0, 1]
    y_up_hi = upper_segs[-1].curve.points[-1, 1]
    y_lo_lo = lower_segs[0].curve.points[0, 1]
    y_lo_hi = lower_segs[-1].curve.points[-1, 1]
    area = (
        sum(s.curve.spline.area_term() for s in lower_segs)
        - sum(s.curve.spline.area_term() for s in upper_segs)
        + x_hi * (y_up_hi - y_lo_hi)
        + x_lo * (y_lo_lo - y_up_lo)
    )
    if area <= 0.0:
        raise GeometryError("jet-core boundary orientation produced a non-positive area")

    saddles = []
    for xs in (0.0, per, 2.0 * per):
        if x_lo - 1e-12 <= xs <= x_hi + 1e-12:
            saddles.append((xs, y_n))
    for xs in (xh, xh + per):
        if x_lo - 1e-12 <= xs <= x_hi + 1e-12:
            saddles.append((xs, y_s))

    dom = DomainSpec(
        kind=KIND_JET_CORE,
        segments=segments,
        area=float(area),
        params=p,
        phase=phase,
        x_range=(x_lo, x_hi),
        period=per,
        levels={GAMMA_UPPER: lev_up, GAMMA_LOWER: lev_low},
        saddles=saddles,
        saddle_cols={GAMMA_UPPER: (0.0, y_n), GAMMA_LOWER: (xh, y_s)},
    )
    _attach_jet_hooks(dom)
    return dom


# ---------------------------------------------------------------------------
# runtime hooks


def _attach_jet_hooks(dom: DomainSpec) -> None:
    p = dom.params

    if dom.kind == KIND_EDDY:
        level = dom.levels[GAMMA_UPPER]
        x_lo, x_hi = dom.x_range
        per = x_hi - x_lo

        # critical-line spline for upper/lower attribution of boundary hits
        xs = np.linspace(x_lo, x_hi, 81)
        ycrit = np.array([critical_ordinate(p, x, "south") for x in xs[:-1]])
        ycrit = np.append(ycrit, ycrit[0])
        crit = CubicSpline(xs, ycrit, bc_type="periodic")

        def inside(x, y):
            return stream_function(p, x, y) - level

        def classify(x, y):
            xw = (x - x_lo) % per + x_lo
            return np.where(y > crit(xw), MARKER_CODE[GAMMA_UPPER], MARKER_CODE[GAMMA_LOWER])

        cx, cy = dom.center
        rx, ry_up, ry_down = dom.ref_axes

        def ray(phis):
            out = np.empty((len(phis), 2))
            for i, phi in enumerate(phis):
                sphi = math.sin(phi)
                ry = ry_up if sphi >= 0.0 else ry_down
                dx, dy = rx * math.cos(phi), ry * sphi
                r0 = math.hypot(dx, dy)
                ex, ey = dx / r0, dy / r0

                def g(t):
                    return float(stream_function(p, cx + t * ex, cy + t * ey)) - level

                # beyond the saddle columns the level function turns positive
                # again inside the neighboring eddy, so cap the search there
                # (on the column itself it is <= 0, vanishing only at the saddle)
                if ex > 1e-14:
                    t_cap = (x_hi - cx) / ex
                elif ex < -1e-14:
                    t_cap = (x_lo - cx) / ex
                else:
                    t_cap = math.inf
                t_prev, t_hit = 0.0, None
                for frac in (0.3, 0.55, 0.75, 0.9, 0.97, 1.0, 1.03, 1.1, 1.25, 1.5, 2.0, 3.0):
                    t = min(frac * r0, t_cap)
                    if g(t) <= 0.0:
                        t_hit = t
                        break
                    t_prev = t
                    if t >= t_cap:
                        break
                if t_hit is None:
                    raise GeometryError(f"center ray at phi={phi!r} never left the eddy")
                t_star = brentq(g, t_prev, t_hit, xtol=1e-13, rtol=8.9e-16)
                out[i] = (cx + t_star * ex, cy + t_star * ey)
            return out

        def project(pts, marker):
            return _newton_to_level(p, pts, dom.marker_level(marker))

        dom._inside_fn = inside
        dom._classify_fn = classify
        dom._ray_fn = ray
        dom._project_fn = project
        dom._boundary_y_fn = None
        dom._mc_spec = {
            "tag": "jet_band",
            "k": p.k,
            "a": p.a,
            "c": p.c,
            "psi_lo": level,
            "psi_hi": math.inf,
        }

    elif dom.kind == KIND_JET_CORE:
        lev_up = dom.levels[GAMMA_UPPER]
        lev_low = dom.levels[GAMMA_LOWER]
        mid = 0.5 * (lev_up + lev_low)
        per = dom.period

        def inside(x, y):
            psi = stream_function(p, x, y)
            return np.minimum(psi - lev_up, lev_low - psi)

        def classify(x, y):
            psi = stream_function(p, x, y)
            return np.where(psi < mid, MARKER_CODE[GAMMA_UPPER], MARKER_CODE[GAMMA_LOWER])

        def boundary_y(x, marker):
            level = dom.marker_level(marker)
            col_x, col_y = dom.saddle_cols[marker]
            # saddle columns repeat with the zonal period
            d = abs((x - col_x + 0.5 * per) % per - 0.5 * per)
            if d < 1e-9:
                return float(col_y)
            return _channel_root(p, x, level)

        def project(pts, marker):
            return _newton_to_level(p, pts, dom.marker_level(marker))

        dom._inside_fn = inside
        dom._classify_fn = classify
        dom._ray_fn = None
        dom._project_fn = project
        dom._boundary_y_fn = boundary_y
        dom._mc_spec = {
            "tag": "jet_band",
            "k": p.k,
            "a": p.a,
            "c": p.c,
            "psi_lo": lev_up,
            "psi_hi": lev_low,
        }

    else:
        raise GeometryError(f"unknown domain kind {dom.kind!r}")


# ---------------------------------------------------------------------------
# synthetic domains for analytic tests


def make_ellipse_domain(
    cx: float = 0.0,
    cy: float = 0.0,
    rx: float = 1.0,
    ry: float = 1.0,
    n_boundary: int = 201,
) -> DomainSpec:
    """Analytic ellipse with the eddy interface (upper/lower half markers)."""
    if rx <= 0.0 or ry <= 0.0:
        raise ParameterError("ellipse semi-axes must be positive")
    # Chebyshev-clustered polar angles keep the open-spline ends accurate
    phi = _cheb_nodes(0.0, math.pi, n_boundary)
    upper = np.column_stack([cx + rx * np.cos(phi[::-1]), cy + ry * np.sin(phi[::-1])])
    lower = np.column_stack([cx + rx * np.cos(math.pi + phi), cy + ry * np.sin(math.pi + phi)])
    # exact endpoints (shared by both halves)
    upper[0] = (cx - rx, cy)
    upper[-1] = (cx + rx, cy)
    lower[0] = (cx - rx, cy)
    lower[-1] = (cx + rx, cy)

    up_curve = SeparatrixCurve(points=upper, level=None)
    lo_curve = SeparatrixCurve(points=lower, level=None)
    area = lo_curve.spline.area_term() - up_curve.spline.area_term()

    dom = DomainSpec(
        kind=KIND_EDDY,
        segments=[
            BoundarySegment("upper", GAMMA_UPPER, up_curve),
            BoundarySegment("lower", GAMMA_LOWER, lo_curve),
        ],
        area=float(area),
        center=(cx, cy),
        x_range=(cx - rx, cx + rx),
        levels={GAMMA_UPPER: None, GAMMA_LOWER: None},
        ref_axes=(rx, ry, ry),
        synthetic={"type": "ellipse", "cx": cx, "cy": cy, "rx": rx, "ry": ry},
    )
    _attach_synthetic_hooks(dom)
    return dom


def make_disk_domain(radius: float = 0.5, center=(0.0, 0.0), n_boundary: int = 201) -> DomainSpec:
    """Disk domain used by the pure-diffusion self-tests."""
    return make_ellipse_domain(center[0], center[1], radius, radius, n_boundary)


def make_strip_domain(
    x0: float = 0.0,
    x1: float = 1.0,
    y0: float = 0.0,
    y1: float = 1.0,
    n_boundary: int = 17,
) -> DomainSpec:
    """Periodic rectangular strip with line boundaries (jet-core interface)."""
    if not (x1 > x0 and y1 > y0):
        raise ParameterError("strip needs x1 > x0 and y1 > y0")
    xs = np.linspace(x0, x1, n_boundary)
    top = np.column_stack([xs, np.full_like(xs, y1)])
    bot = np.column_stack([xs, np.full_like(xs, y0)])
    dom = DomainSpec(
        kind=KIND_JET_CORE,
        segments=[
            BoundarySegment("upper", GAMMA_UPPER, SeparatrixCurve(top, None)),
            BoundarySegment("lower", GAMMA_LOWER, SeparatrixCurve(bot, None)),
        ],
        area=float((x1 - x0) * (y1 - y0)),
        phase=None,
        x_range=(x0, x1),
        period=float(x1 - x0),
        levels={GAMMA_UPPER: None, GAMMA_LOWER: None},
        synthetic={"type": "strip", "x0": x0, "x1": x1, "y0": y0, "y1": y1},
    )
    _attach_synthetic_hooks(dom)
    return dom


def _attach_synthetic_hooks(dom: DomainSpec) -> None:
    desc = dom.synthetic
    if desc["type"] == "ellipse":
        cx, cy, rx, ry = desc["cx"], desc["cy"], desc["rx"], desc["ry"]

        def inside(x, y):
            return 1.0 - ((x - cx) / rx) ** 2 - ((y - cy) / ry) ** 2

        def classify(x, y):
            return np.where(y >= cy, MARKER_CODE[GAMMA_UPPER], MARKER_CODE[GAMMA_LOWER])

        def ray(phis):
            return np.column_stack([cx + rx * np.cos(phis), cy + ry * np.sin(phis)])

        def project(pts, marker):
            pts = np.atleast_2d(pts)
            dx = (pts[:, 0] - cx) / rx
            dy = (pts[:, 1] - cy) / ry
            r = np.maximum(np.hypot(dx, dy), 1e-300)
            return np.column_stack([cx + rx * dx / r, cy + ry * dy / r])

        dom._inside_fn = inside
        dom._classify_fn = classify
        dom._ray_fn = ray
        dom._project_fn = project
        dom._boundary_y_fn = None
        if abs(rx - ry) < 1e-14:
            dom._mc_spec = {"tag": "disk", "cx": cx, "cy": cy, "radius": rx}
        else:
            dom._mc_spec = None

    elif desc["type"] == "strip":
        x0, x1, y0, y1 = desc["x0"], desc["x1"], desc["y0"], desc["y1"]

        def inside(x, y):
            return np.minimum(y1 - y, y - y0) + 0.0 * x

        def classify(x, y):
            mid = 0.5 * (y0 + y1)
            return np.where(y >= mid, MARKER_CODE[GAMMA_UPPER], MARKER_CODE[GAMMA_LOWER])

        def boundary_y(x, marker):
            return y1 if marker == GAMMA_UPPER else y0

        def project(pts, marker):
            pts = np.atleast_2d(pts).copy()
            pts[:, 1] = y1 if marker == GAMMA_UPPER else y0
            return pts

        dom._inside_fn = inside
        dom._classify_fn = classify
        dom._ray_fn = None
        dom._project_fn = project
        dom._boundary_y_fn = boundary_y
        dom._mc_spec = {"tag": "strip", "y0": y0, "y1": y1}

    else:
        raise GeometryError(f"unknown synthetic domain type {desc['type']!r}")
