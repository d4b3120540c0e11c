"""Flow geometry: stagnation points, level-set tracing, boundary splines.

The stream function has a row of recirculating eddies on each flank of
the jet core.  Stagnation points of the drift all lie on the axes
sin(k*x) = 0; saddles sit at the eddy ends and one center sits inside
each eddy.  Separatrices are level sets of Psi through the saddles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DegeneratePointError, GeometryError, ParameterError, TracingBudgetError
from .flowfield import JetParameters, stream_function, velocity, velocity_jacobian

_DUPLICATE_TOL = 1e-6


@dataclass(frozen=True)
class StagnationPoint:
    """A zero of the drift with its local classification."""

    x: float
    y: float
    stream_value: float
    kind: str  # "saddle" (det J < 0) or "center" (det J > 0)

    @property
    def location(self):
        return (self.x, self.y)


class ParametricSpline:
    """C2 parametric cubic through ordered plane points.

    The parameter is cumulative chord length.  Open curves get natural
    end conditions; closed curves get periodic ones (the first point is
    reused as the last knot and must not be duplicated in the input).
    """

    def __init__(self, points, closed=False):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ParameterError("spline input must have shape (n, 2)")
        n_min = 3 if closed else 4
        if len(pts) < n_min:
            raise ParameterError(
                f"need at least {n_min} points for a {'closed' if closed else 'open'} "
                f"cubic spline, got {len(pts)}"
            )
        gaps = np.hypot(*(np.diff(pts, axis=0).T))
        if np.any(gaps < 1e-12):
            raise ParameterError("consecutive spline points closer than 1e-12")
        if closed:
            if np.hypot(*(pts[-1] - pts[0])) < 1e-12:
                raise ParameterError("closed curve input must not repeat the first point")
            pts = np.vstack([pts, pts[:1]])
            gaps = np.hypot(*(np.diff(pts, axis=0).T))
        t = np.concatenate([[0.0], np.cumsum(gaps)])
        bc = "periodic" if closed else "natural"
        self.closed = bool(closed)
        self.knots = t
        self.points = pts
        self._spline = CubicSpline(t, pts, axis=0, bc_type=bc)
        self._deriv = self._spline.derivative()

    @property
    def t_end(self) -> float:
        return float(self.knots[-1])

    def __call__(self, t):
        return self._spline(t)

    def tangent(self, t):
        return self._deriv(t)

    def arc_length(self, n_gauss: int = 4) -> float:
        """Arc length by fixed-order Gauss quadrature on each knot interval."""
        nodes, weights = np.polynomial.legendre.leggauss(n_gauss)
        t0 = self.knots[:-1]
        dt = np.diff(self.knots)
        # map nodes from [-1, 1] into every interval at once
        tq = t0[:, None] + 0.5 * dt[:, None] * (nodes[None, :] + 1.0)
        speed = np.hypot(*np.moveaxis(self._deriv(tq), -1, 0))
        return float(np.sum(0.5 * dt[:, None] * weights[None, :] * speed))

    def area_term(self, n_gauss: int = 4) -> float:
        """Green's-theorem contribution  integral x dy  along the curve."""
        nodes, weights = np.polynomial.legendre.leggauss(n_gauss)
        t0 = self.knots[:-1]
        dt = np.diff(self.knots)
        tq = t0[:, None] + 0.5 * dt[:, None] * (nodes[None, :] + 1.0)
        xy = self._spline(tq)
        dxy = self._deriv(tq)
        return float(np.sum(0.5 * dt[:, None] * weights[None, :] * xy[..., 0] * dxy[..., 1]))

    def closest_point(self, q, n_scan: int = 400):
        """Parameter and point of the closest spline location to q.

        Dense scan over the knot span followed by a few Newton steps on
        the squared-distance derivative; accurate to ~1e-12 for smooth
        curves.
        """
        q = np.asarray(q, dtype=float)
        ts = np.linspace(0.0, self.t_end, n_scan)
        d2 = np.sum((self._spline(ts) - q) ** 2, axis=1)
        t = float(ts[np.argmin(d2)])
        dd = self._deriv.derivative()
        for _ in range(30):
            p = self._spline(t)
            dp = self._deriv(t)
            ddp = dd(t)
            r = p - q
            g = 2.0 * float(r @ dp)
            h = 2.0 * float(dp @ dp + r @ ddp)
            if h <= 0.0:
                break
            step = g / h
            t_new = t - step
            if self.closed:
                t_new = t_new % self.t_end
            else:
                t_new = min(max(t_new, 0.0), self.t_end)
            if abs(t_new - t) < 1e-14 * max(1.0, self.t_end):
                t = t_new
                break
            t = t_new
        return t, self._spline(t)


def fit_cubic_spline(points, closed: bool = False) -> ParametricSpline:
    """Interpolating parametric cubic spline through ordered points.

    Natural end conditions for open curves, periodic for closed ones;
    evaluation at the knots reproduces the input to round-off.
    """
    return ParametricSpline(points, closed=closed)


@dataclass
class SeparatrixCurve:
    """An ordered point chain on one stream-function level, with its spline."""

    points: np.ndarray
    level: float | None
    closed: bool = False
    saddle_hit: bool = False
    spline: ParametricSpline = field(default=None, repr=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.spline is None:
            self.spline = fit_cubic_spline(self.points, closed=self.closed)

    def __len__(self):
        return len(self.points)


# ---------------------------------------------------------------------------
# stagnation points


def _newton_root(p: JetParameters, x0, y0, tol=1e-13, max_iter=60, max_step=None):
    """Newton iteration on the drift from one seed; None if it fails."""
    x, y = float(x0), float(y0)
    for _ in range(max_iter):
        u, v = velocity(p, x, y)
        if math.hypot(u, v) < tol:
            return x, y
        jac = velocity_jacobian(p, x, y)
        det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
        if abs(det) < 1e-300:
            return None
        dx = (-u * jac[1, 1] + v * jac[0, 1]) / det
        dy = (-v * jac[0, 0] + u * jac[1, 0]) / det
        if max_step is not None:
            step = math.hypot(dx, dy)
            if step > max_step:
                scale = max_step / step
                dx *= scale
                dy *= scale
        x += dx
        y += dy
        if not (math.isfinite(x) and math.isfinite(y)):
            return None
    u, v = velocity(p, x, y)
    if math.hypot(u, v) < tol:
        return x, y
    return None


def find_stagnation_points(
    p: JetParameters,
    window=None,
    grid=(32, 24),
    tol: float = 1e-13,
) -> list[StagnationPoint]:
    """All drift zeros inside the window, classified by the Jacobian sign.

    Newton is started from every cell of a seed grid; converged roots are
    deduplicated at 1e-6 and classified as saddle (det J < 0) or center
    (det J > 0).  A vanishing Jacobian determinant at an accepted root
    raises DegeneratePointError.

    Parameters
    ----------
    window : (xmin, xmax, ymin, ymax), optional
        Search box; defaults to one zonal period and |y| <= 2.
    grid : (nx, ny)
        Seed grid resolution.
    """
    if window is None:
        window = (0.0, p.period, -2.0, 2.0)
    xmin, xmax, ymin, ymax = map(float, window)
    nx, ny = grid
    xs = np.linspace(xmin, xmax, nx)
    ys = np.linspace(ymin, ymax, ny)
    span = math.hypot(xmax - xmin, ymax - ymin)
    margin = 1e-9 * max(1.0, span)

    roots: list[tuple[float, float]] = []
    for xseed in xs:
        for yseed in ys:
            got = _newton_root(p, xseed, yseed, tol=tol, max_step=0.5 * span)
            if got is None:
                continue
            x, y = got
            if not (xmin - margin <= x <= xmax + margin and ymin - margin <= y <= ymax + margin):
                continue
            if any(math.hypot(x - rx, y - ry) < _DUPLICATE_TOL for rx, ry in roots):
                continue
            roots.append((x, y))

    points = []
    for x, y in sorted(roots):
        jac = velocity_jacobian(p, x, y)
        det = float(jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0])
        scale = float(np.max(np.abs(jac))) ** 2
        if abs(det) < 1e-12 * max(scale, 1e-30):
            raise DegeneratePointError((x, y))
        kind = "saddle" if det < 0.0 else "center"
        points.append(
            StagnationPoint(x=x, y=y, stream_value=float(stream_function(p, x, y)), kind=kind)
        )
    return points


# ---------------------------------------------------------------------------
# level-set tracing (predictor-corrector marching)


def trace_level_set(
    p: JetParameters | None,
    level: float,
    seed,
    step: float = 1e-3,
    *,
    stream_fn=None,
    grad_fn=None,
    bbox=None,
    corrector_tol: float = 1e-10,
    max_points: int = 200_000,
) -> SeparatrixCurve:
    """March along {Psi = level} from a seed point.

    A tangent predictor (perpendicular to the gradient) of length ``step``
    is followed by Newton projection back onto the level set.  Marching
    stops when the curve closes on itself, leaves the bounding box, or
    reaches a point with |grad Psi| < 1e-10 (a saddle); exceeding
    ``max_points`` raises TracingBudgetError.

    ``stream_fn``/``grad_fn`` override the jet stream function for
    synthetic test fields; otherwise ``p`` supplies it.
    """
    if stream_fn is None:
        if p is None:
            raise ParameterError("either params or stream_fn must be given")
        stream_fn = lambda x, y: float(stream_function(p, x, y))
    if grad_fn is None:
        if p is None:
            raise ParameterError("grad_fn is required with a custom stream_fn")

        # velocity = (-Psi_y, Psi_x), hence grad Psi = (v, -u)
        def grad_fn(x, y):
            u, v = velocity(p, x, y)
            return v, -u

    if step <= 0.0:
        raise ParameterError(f"step must be positive, got {step!r}")
    if bbox is None:
        x0, y0 = seed
        half = 3.0 * (p.period if p is not None else 10.0)
        bbox = (x0 - half, x0 + half, -4.0 + min(y0, 0.0), 4.0 + max(y0, 0.0))
    xmin, xmax, ymin, ymax = map(float, bbox)

    def project(x, y):
        for _ in range(50):
            r = stream_fn(x, y) - level
            if abs(r) <= corrector_tol:
                return x, y
            gx, gy = grad_fn(x, y)
            g2 = gx * gx + gy * gy
            if g2 < 1e-30:
                return None
            x -= r * gx / g2
            y -= r * gy / g2
        return (x, y) if abs(stream_fn(x, y) - level) <= corrector_tol else None

    start = project(*map(float, seed))
    if start is None:
        raise GeometryError(f"could not project seed {tuple(seed)} onto level {level!r}")

    pts = [start]
    saddle_hit = False
    closed = False
    x, y = start
    while True:
        gx, gy = grad_fn(x, y)
        gnorm = math.hypot(gx, gy)
        if gnorm < 1e-10:
            saddle_hit = True
            break
        tx, ty = -gy / gnorm, gx / gnorm
        cand = project(x + step * tx, y + step * ty)
        if cand is None:
            saddle_hit = True  # corrector dies only where the gradient degenerates
            break
        x, y = cand
        if not (xmin <= x <= xmax and ymin <= y <= ymax):
            pts.append((x, y))
            break
        if len(pts) >= 3 and math.hypot(x - start[0], y - start[1]) < 0.5 * step:
            closed = True
            break
        pts.append((x, y))
        if len(pts) > max_points:
            raise TracingBudgetError(
                f"level-set trace exceeded {max_points} points without terminating"
            )

    return SeparatrixCurve(
        points=np.asarray(pts), level=float(level), closed=closed, saddle_hit=saddle_hit
    )


# ---------------------------------------------------------------------------
# on-axis roots used by the domain builders


def critical_ordinate(p: JetParameters, x: float, side: str, bracket=3.0) -> float:
    """Ordinate of the u = 0 line at abscissa x, on the "north" or "south" side.

    Between the two critical lines Psi is strictly monotone in y, which
    is what makes every separatrix chain a graph over x; the lines also
    carry every stagnation point.
    """
    from scipy.optimize import brentq

    if side == "south":
        inner, outer = 0.0, -float(bracket)
    elif side == "north":
        inner, outer = 0.0, float(bracket)
    else:
        raise ParameterError(f"side must be 'north' or 'south', got {side!r}")

    def u_of_y(y):
        return velocity(p, x, y)[0]

    # u > 0 on the jet axis and u < 0 far outside: exactly one sign change
    if u_of_y(inner) <= 0.0 or u_of_y(outer) >= 0.0:
        raise GeometryError(f"critical-line bracket failed at x={x!r} ({side})")
    lo, hi = (outer, inner) if side == "south" else (inner, outer)
    return float(brentq(u_of_y, lo, hi, xtol=1e-14, rtol=8.9e-16))
