"""Dependency-free SVG rendering of nodal fields and sweep curves.

The nodal interpolant is linear on each triangle, so the set where it
falls between two level values is a convex polygon: clip the triangle
against both half-planes in value space and fill the result.  One SVG
path per band keeps files small, and every coordinate goes through a
fixed-precision formatter so identical inputs give identical bytes.

Also hosts the normal-probe sampler used to check that a field's
contour bands are layered monotonically along the boundary, which is
how figure-shaped output gets verified without comparing pixels.
"""

from __future__ import annotations

import numpy as np

from .domains import MARKERS

# ten-band fill ramp (dark blue -> yellow), frozen so output is stable
BAND_COLORS = (
    "#30123b",
    "#3e3e9c",
    "#4566dc",
    "#4391fe",
    "#28bbeb",
    "#18dcc3",
    "#35f394",
    "#6dfd62",
    "#a4fc3c",
    "#d1e834",
)

LINE_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")

_FONT = 'font-family="Helvetica,Arial,sans-serif"'


def _f(v):
    """Fixed two-decimal pixel coordinate, without negative zero."""
    s = f"{float(v):.2f}"
    return "0.00" if s == "-0.00" else s


def _label(v):
    s = f"{float(v):.4g}"
    return "0" if s == "-0" else s


def _clip_value(poly, vals, level, keep_above):
    """One Sutherland-Hodgman pass against f >= level (or <=)."""
    out_p = []
    out_v = []
    n = len(poly)
    for i in range(n):
        p0, f0 = poly[i], vals[i]
        p1, f1 = poly[(i + 1) % n], vals[(i + 1) % n]
        in0 = f0 >= level if keep_above else f0 <= level
        in1 = f1 >= level if keep_above else f1 <= level
        if in0:
            out_p.append(p0)
            out_v.append(f0)
        if in0 != in1:
            t = (level - f0) / (f1 - f0)
            out_p.append((p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1])))
            out_v.append(level)
    return out_p, out_v


def band_polygons(mesh, values, levels):
    """Per-band lists of polygons covering {levels[i] <= f <= levels[i+1]}.

    Returns a list of length len(levels) - 1; each entry is a list of
    point tuples in mesh coordinates.  Degenerate slivers (fewer than
    three corners after clipping) are dropped.
    """
    values = np.asarray(values, dtype=float)
    corners = mesh.triangle_corners()
    fvals = values[mesh.triangles]
    bands = [[] for _ in range(len(levels) - 1)]
    fmin = fvals.min(axis=1)
    fmax = fvals.max(axis=1)
    for b in range(len(levels) - 1):
        lo, hi = levels[b], levels[b + 1]
        # triangles that can contribute to this band
        touch = np.flatnonzero((fmax >= lo) & (fmin <= hi))
        for t in touch:
            poly = [tuple(q) for q in corners[t]]
            vals = list(fvals[t])
            if fmin[t] < lo:
                poly, vals = _clip_value(poly, vals, lo, keep_above=True)
            if len(poly) >= 3 and fmax[t] > hi:
                poly, vals = _clip_value(poly, vals, hi, keep_above=False)
            if len(poly) >= 3:
                bands[b].append(poly)
    return bands


def default_levels(values, n_bands: int = 10):
    """Evenly spaced band edges spanning the data range."""
    vmin = float(np.min(values))
    vmax = float(np.max(values))
    if vmax - vmin < 1e-15:
        pad = max(abs(vmin), 1.0) * 1e-6
        vmin, vmax = vmin - pad, vmax + pad
    return np.linspace(vmin, vmax, n_bands + 1)


def _boundary_polyline(domain, n_per_segment=160):
    """Sampled outline chains of the domain, one polyline per segment."""
    chains = []
    for seg in domain.segments:
        sp = seg.curve.spline
        ts = np.linspace(0.0, sp.t_end, n_per_segment)
        chains.append(np.asarray(sp(ts)))
    return chains


class _Frame:
    """Data-to-pixel transform with a fixed margin, y pointing up."""

    def __init__(self, xmin, xmax, ymin, ymax, width, margin, extra_right=0.0):
        self.xmin, self.ymax = xmin, ymax
        span_x = max(xmax - xmin, 1e-12)
        span_y = max(ymax - ymin, 1e-12)
        self.scale = (width - 2.0 * margin - extra_right) / span_x
        self.margin = margin
        self.width = width
        self.height = 2.0 * margin + span_y * self.scale

    def x(self, x):
        return self.margin + (x - self.xmin) * self.scale

    def y(self, y):
        return self.margin + (self.ymax - y) * self.scale


def field_svg(field, domain=None, levels=None, width: float = 640.0, title: str | None = None):
    """Filled-contour SVG (10 bands) of a nodal field, as a string.

    ``levels`` may pin the band edges (e.g. 0..1 for probabilities);
    otherwise they span the field's range.  If ``domain`` is given its
    boundary splines are drawn on top of the fill.
    """
    mesh = field.mesh
    if levels is None:
        levels = default_levels(field.values)
    levels = np.asarray(levels, dtype=float)
    bands = band_polygons(mesh, field.values, levels)

    v = mesh.vertices
    legend_w = 64.0
    margin = 36.0
    fr = _Frame(v[:, 0].min(), v[:, 0].max(), v[:, 1].min(), v[:, 1].max(),
                width, margin, extra_right=legend_w)
    title_h = 22.0 if title else 0.0
    height = fr.height + title_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(width)}" '
        f'height="{_f(height)}" viewBox="0 0 {_f(width)} {_f(height)}">',
        f'<rect width="{_f(width)}" height="{_f(height)}" fill="#ffffff"/>',
    ]
    if title:
        parts.append(
            f'<text x="{_f(width / 2)}" y="15" text-anchor="middle" {_FONT} '
            f'font-size="13">{title}</text>'
        )
    parts.append(f'<g transform="translate(0 {_f(title_h)})">')

    for b, polys in enumerate(bands):
        if not polys:
            continue
        d = []
        for poly in polys:
            d.append("M" + " L".join(f"{_f(fr.x(px))},{_f(fr.y(py))}" for px, py in poly) + " Z")
        # hairline stroke in the fill color hides antialiasing seams
        parts.append(
            f'<path d="{" ".join(d)}" fill="{BAND_COLORS[b % len(BAND_COLORS)]}" '
            f'stroke="{BAND_COLORS[b % len(BAND_COLORS)]}" stroke-width="0.4"/>'
        )

    if domain is not None:
        for chain in _boundary_polyline(domain):
            pts = " ".join(f"{_f(fr.x(px))},{_f(fr.y(py))}" for px, py in chain)
            parts.append(
                f'<polyline points="{pts}" fill="none" stroke="#1a1a1a" stroke-width="1.2"/>'
            )

    # legend: stacked swatches, edge labels top-to-bottom
    lx = width - legend_w + 10.0
    ly0 = margin
    sw_h = (fr.height - 2.0 * margin) / len(BAND_COLORS)
    for b in range(len(BAND_COLORS)):
        y = ly0 + (len(BAND_COLORS) - 1 - b) * sw_h
        parts.append(
            f'<rect x="{_f(lx)}" y="{_f(y)}" width="14" height="{_f(sw_h)}" '
            f'fill="{BAND_COLORS[b]}"/>'
        )
    for b in range(len(levels)):
        y = ly0 + (len(BAND_COLORS) - b) * sw_h
        parts.append(
            f'<text x="{_f(lx + 18)}" y="{_f(y + 3)}" {_FONT} font-size="10">'
            f"{_label(levels[b])}</text>"
        )
    parts.append("</g></svg>")
    return "\n".join(parts) + "\n"


def _nice_ticks(lo, hi, target=5):
    """Round tick positions at a 1/2/5 step covering [lo, hi]."""
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / max(target, 1)
    mag = 10.0 ** np.floor(np.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        step = mult * mag
        if span / step <= target:
            break
    t0 = np.ceil(lo / step) * step
    ticks = np.arange(t0, hi + 0.5 * step, step)
    return [float(t) for t in ticks]


def line_plot_svg(
    x,
    series: dict,
    xlabel: str = "",
    ylabel: str = "",
    title: str | None = None,
    width: float = 640.0,
    height: float = 420.0,
    y_range=None,
):
    """Simple multi-series line chart with markers and a legend."""
    x = np.asarray(x, dtype=float)
    names = list(series)
    ys = {n: np.asarray(series[n], dtype=float) for n in names}

    finite = np.concatenate([ys[n][np.isfinite(ys[n])] for n in names]) if names else np.array([0.0])
    if finite.size == 0:
        finite = np.array([0.0, 1.0])
    if y_range is not None:
        ylo, yhi = map(float, y_range)
    else:
        ylo, yhi = float(finite.min()), float(finite.max())
        pad = 0.06 * max(yhi - ylo, 1e-12)
        ylo, yhi = ylo - pad, yhi + pad
    xlo, xhi = float(x.min()), float(x.max())
    if xhi - xlo < 1e-12:
        xlo, xhi = xlo - 0.5, xhi + 0.5

    ml, mr, mt, mb = 64.0, 18.0, 34.0 if title else 16.0, 46.0
    pw, ph = width - ml - mr, height - mt - mb

    def sx(v):
        return ml + (v - xlo) / (xhi - xlo) * pw

    def sy(v):
        return mt + (yhi - v) / (yhi - ylo) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(width)}" '
        f'height="{_f(height)}" viewBox="0 0 {_f(width)} {_f(height)}">',
        f'<rect width="{_f(width)}" height="{_f(height)}" fill="#ffffff"/>',
    ]
    if title:
        parts.append(
            f'<text x="{_f(width / 2)}" y="18" text-anchor="middle" {_FONT} '
            f'font-size="13">{title}</text>'
        )

    for tx in _nice_ticks(xlo, xhi):
        px = sx(tx)
        parts.append(
            f'<line x1="{_f(px)}" y1="{_f(mt)}" x2="{_f(px)}" y2="{_f(mt + ph)}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_f(px)}" y="{_f(mt + ph + 16)}" text-anchor="middle" {_FONT} '
            f'font-size="10">{_label(tx)}</text>'
        )
    for ty in _nice_ticks(ylo, yhi):
        py = sy(ty)
        parts.append(
            f'<line x1="{_f(ml)}" y1="{_f(py)}" x2="{_f(ml + pw)}" y2="{_f(py)}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_f(ml - 6)}" y="{_f(py + 3)}" text-anchor="end" {_FONT} '
            f'font-size="10">{_label(ty)}</text>'
        )
    parts.append(
        f'<rect x="{_f(ml)}" y="{_f(mt)}" width="{_f(pw)}" height="{_f(ph)}" '
        f'fill="none" stroke="#444444" stroke-width="1"/>'
    )
    if xlabel:
        parts.append(
            f'<text x="{_f(ml + pw / 2)}" y="{_f(height - 10)}" text-anchor="middle" '
            f'{_FONT} font-size="11">{xlabel}</text>'
        )
    if ylabel:
        yc = mt + ph / 2
        parts.append(
            f'<text x="16" y="{_f(yc)}" text-anchor="middle" {_FONT} font-size="11" '
            f'transform="rotate(-90 16 {_f(yc)})">{ylabel}</text>'
        )

    for i, name in enumerate(names):
        col = LINE_COLORS[i % len(LINE_COLORS)]
        yv = ys[name]
        ok = np.isfinite(yv)
        pts = " ".join(f"{_f(sx(a))},{_f(sy(b))}" for a, b in zip(x[ok], yv[ok]))
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{col}" stroke-width="1.6"/>'
        )
        for a, b in zip(x[ok], yv[ok]):
            parts.append(f'<circle cx="{_f(sx(a))}" cy="{_f(sy(b))}" r="2.2" fill="{col}"/>')
        ly = mt + 14 + 14 * i
        parts.append(
            f'<line x1="{_f(ml + pw - 130)}" y1="{_f(ly - 3)}" x2="{_f(ml + pw - 110)}" '
            f'y2="{_f(ly - 3)}" stroke="{col}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{_f(ml + pw - 105)}" y="{_f(ly)}" {_FONT} font-size="10">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def layering_profiles(
    field,
    domain,
    marker: str,
    depth: float,
    n_stations: int = 12,
    n_depths: int = 16,
    end_inset: float = 0.08,
):
    """Field values along inward normals from one boundary marker.

    Walks ``n_stations`` points along each boundary segment carrying
    ``marker`` (keeping ``end_inset`` of the parameter span away from
    segment ends, where eddy corners sit), steps inward along the unit
    normal to ``depth``, and samples the field at ``n_depths`` stations.
    Returns an array of shape (stations, n_depths); row s is the profile
    from boundary point s going inward.  Escape-probability fields with
    monotone contour layering give rows that decrease away from their
    own boundary.
    """
    if marker not in MARKERS:
        raise ValueError(f"unknown marker {marker!r}")
    segs = [s for s in domain.segments if s.marker == marker]
    if not segs:
        raise ValueError(f"domain has no segment with marker {marker!r}")
    rows = []
    depths = np.linspace(depth / n_depths, depth, n_depths)
    for seg in segs:
        sp = seg.curve.spline
        ts = np.linspace(end_inset * sp.t_end, (1.0 - end_inset) * sp.t_end, n_stations)
        for t in ts:
            px, py = sp(float(t))
            tx, ty = sp.tangent(float(t))
            norm = float(np.hypot(tx, ty))
            nx, ny = -ty / norm, tx / norm
            probe = depths[0]
            if not domain.contains(px + probe * nx, py + probe * ny):
                nx, ny = -nx, -ny
            if not domain.contains(px + probe * nx, py + probe * ny):
                # too near a corner for this depth; skip the station
                continue
            pts = np.column_stack([px + depths * nx, py + depths * ny])
            inside = np.array([domain.contains(a, b) for a, b in pts])
            vals = np.full(n_depths, np.nan)
            if inside.any():
                vals[inside] = np.atleast_1d(field.sample(pts[inside]))
            rows.append(vals)
    if not rows:
        raise ValueError("no usable normal stations; reduce depth or inset")
    return np.asarray(rows)
