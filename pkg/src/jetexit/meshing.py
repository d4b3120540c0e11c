"""Structured triangular meshes on the curved domains.

Both generators deform a regular reference grid:

* ``mesh_eddy`` lays a polar grid on a reference ellipse fitted to the
  eddy (center at the stagnation center) and blends each ray so the
  outer ring lands on the boundary spline.  On a synthetic ellipse the
  map is the identity.
* ``mesh_jet_core`` lays an n_x x n_y grid on a reference rectangle and
  maps it by vertical transfinite interpolation between the lower and
  upper boundary chains; the right column is the left column translated
  by one period, and the two are recorded as periodic pairs.

Quads are split along their shorter diagonal, which keeps the split
triangles of thin streamline-aligned cells right-angled rather than
obtuse.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .domains import CODE_MARKER, GAMMA_LOWER, GAMMA_UPPER, MARKER_CODE, DomainSpec
from .errors import MeshQualityError, ParameterError

BOUNDARY_TOL = 1e-6
PAIR_TOL = 1e-10


@dataclass
class TriangleMesh:
    """Conforming triangle mesh with boundary markers and periodic pairs.

    ``vertex_markers`` holds 0 for interior vertices and the marker codes
    1 (gamma_upper) / 2 (gamma_lower) for boundary vertices.  Periodic
    pairs list (left, right) vertex indices identified by the solver;
    they are kept as distinct vertices here.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    vertex_markers: np.ndarray
    periodic_pairs: np.ndarray = field(
        default_factory=lambda: np.zeros((0, 2), dtype=np.int32)
    )

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int32)
        self.vertex_markers = np.ascontiguousarray(self.vertex_markers, dtype=np.uint8)
        self.periodic_pairs = np.ascontiguousarray(self.periodic_pairs, dtype=np.int32)
        if self.periodic_pairs.size == 0:
            self.periodic_pairs = self.periodic_pairs.reshape(0, 2)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    def triangle_corners(self):
        """Corner coordinates, shape (m, 3, 2)."""
        return self.vertices[self.triangles]

    def signed_areas(self):
        c = self.triangle_corners()
        d1 = c[:, 1] - c[:, 0]
        d2 = c[:, 2] - c[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def edge_lengths(self):
        c = self.triangle_corners()
        out = np.empty((self.n_triangles, 3))
        for i in range(3):
            d = c[:, (i + 1) % 3] - c[:, i]
            out[:, i] = np.hypot(d[:, 0], d[:, 1])
        return out

    @property
    def h_max(self):
        return float(self.edge_lengths().max())

    @property
    def h_min(self):
        return float(self.edge_lengths().min())

    def edges(self):
        """Unique undirected edges with incidence counts.

        Returns (edges (e,2) sorted pairs, counts (e,), inverse (m,3)).
        """
        tri = self.triangles
        raw = np.concatenate(
            [tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]], axis=0
        )
        raw = np.sort(raw, axis=1)
        edges, inverse, counts = np.unique(
            raw, axis=0, return_inverse=True, return_counts=True
        )
        return edges, counts, inverse.reshape(3, -1).T

    def boundary_edges(self):
        edges, counts, _ = self.edges()
        return edges[counts == 1]

    def boundary_loop(self):
        """Boundary vertex indices ordered around the (single) boundary cycle."""
        be = self.boundary_edges()
        adj = {}
        for a, b in be:
            adj.setdefault(int(a), []).append(int(b))
            adj.setdefault(int(b), []).append(int(a))
        for v, nb in adj.items():
            if len(nb) != 2:
                raise MeshQualityError(f"boundary vertex {v} has degree {len(nb)}")
        start = int(be[0, 0])
        loop = [start]
        prev, cur = None, start
        while True:
            a, b = adj[cur]
            nxt = b if a == prev else a
            if nxt == start:
                break
            loop.append(nxt)
            prev, cur = cur, nxt
            if len(loop) > len(be) + 1:
                raise MeshQualityError("boundary walk did not close")
        if len(loop) != len(be):
            raise MeshQualityError("mesh boundary is not a single closed cycle")
        return np.array(loop, dtype=np.int32)

    # -- serialization --

    def to_dict(self):
        return {
            "vertices": self.vertices.tolist(),
            "triangles": self.triangles.tolist(),
            "vertex_markers": self.vertex_markers.tolist(),
            "periodic_pairs": self.periodic_pairs.tolist(),
        }

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f)

    @classmethod
    def from_dict(cls, doc):
        return cls(
            vertices=np.asarray(doc["vertices"], dtype=np.float64),
            triangles=np.asarray(doc["triangles"], dtype=np.int32),
            vertex_markers=np.asarray(doc["vertex_markers"], dtype=np.uint8),
            periodic_pairs=np.asarray(doc["periodic_pairs"], dtype=np.int32).reshape(-1, 2),
        )

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def sha256(self):
        """Stable content hash used to tie exported fields to their mesh."""
        h = hashlib.sha256()
        h.update(self.vertices.tobytes())
        h.update(self.triangles.tobytes())
        h.update(self.vertex_markers.tobytes())
        h.update(self.periodic_pairs.tobytes())
        return h.hexdigest()


@dataclass
class QualityReport:
    min_angle: float
    max_angle: float
    max_aspect: float
    h_max: float
    h_min: float
    total_area: float
    n_vertices: int
    n_triangles: int
    worst_triangle: int


def mesh_quality(mesh: TriangleMesh) -> QualityReport:
    """Angle / aspect / size summary of a mesh."""
    c = mesh.triangle_corners()
    angles = np.empty((mesh.n_triangles, 3))
    for i in range(3):
        u = c[:, (i + 1) % 3] - c[:, i]
        w = c[:, (i + 2) % 3] - c[:, i]
        dot = u[:, 0] * w[:, 0] + u[:, 1] * w[:, 1]
        nu = np.hypot(u[:, 0], u[:, 1])
        nw = np.hypot(w[:, 0], w[:, 1])
        angles[:, i] = np.degrees(np.arccos(np.clip(dot / (nu * nw), -1.0, 1.0)))
    lengths = mesh.edge_lengths()
    areas = mesh.signed_areas()
    perim = lengths.sum(axis=1)
    # normalized so an equilateral triangle scores exactly 1
    with np.errstate(divide="ignore", invalid="ignore"):
        aspect = lengths.max(axis=1) * perim / (4.0 * math.sqrt(3.0) * np.abs(areas))
    worst = int(np.argmin(angles.min(axis=1)))
    return QualityReport(
        min_angle=float(angles.min()),
        max_angle=float(angles.max()),
        max_aspect=float(aspect.max()),
        h_max=float(lengths.max()),
        h_min=float(lengths.min()),
        total_area=float(areas.sum()),
        n_vertices=mesh.n_vertices,
        n_triangles=mesh.n_triangles,
        worst_triangle=worst,
    )


def validate_mesh(mesh: TriangleMesh, domain: DomainSpec | None = None) -> None:
    """Check structural invariants; raises MeshQualityError on violation."""
    areas = mesh.signed_areas()
    if areas.min() <= 0.0:
        bad = int(np.argmin(areas))
        raise MeshQualityError(
            f"triangle {bad} has non-positive area {areas[bad]:.3e} "
            f"(vertices {mesh.triangles[bad].tolist()})"
        )
    if mesh.triangles.min() < 0 or mesh.triangles.max() >= mesh.n_vertices:
        raise MeshQualityError("triangle vertex index out of range")

    edges, counts, _ = mesh.edges()
    if counts.max() > 2:
        raise MeshQualityError("non-conforming mesh: an edge is shared by > 2 triangles")

    # every boundary edge must join two boundary-tagged vertices
    bdry = edges[counts == 1]
    tagged = mesh.vertex_markers > 0
    paired = np.zeros(mesh.n_vertices, dtype=bool)
    paired[mesh.periodic_pairs.ravel()] = True
    on_bdry = tagged | paired
    if not np.all(on_bdry[bdry].all(axis=1)):
        raise MeshQualityError("boundary edge touches an untagged interior vertex")

    # triangle areas telescope to the boundary-polygon area
    loop = mesh.boundary_loop()
    pts = mesh.vertices[loop]
    poly = 0.5 * abs(
        np.sum(pts[:, 0] * np.roll(pts[:, 1], -1) - np.roll(pts[:, 0], -1) * pts[:, 1])
    )
    total = areas.sum()
    if abs(total - poly) > 1e-12 * max(1.0, poly):
        raise MeshQualityError(
            f"triangle areas sum to {total!r} but the boundary polygon encloses {poly!r}"
        )

    if mesh.periodic_pairs.size:
        d = mesh.vertices[mesh.periodic_pairs[:, 1]] - mesh.vertices[mesh.periodic_pairs[:, 0]]
        if domain is not None and domain.period is not None:
            if np.abs(d[:, 0] - domain.period).max() > PAIR_TOL:
                raise MeshQualityError("periodic pair x-offset differs from the period")
        if np.abs(d[:, 1]).max() > PAIR_TOL:
            raise MeshQualityError("periodic pair y-coordinates differ")

    if domain is not None:
        for code, name in CODE_MARKER.items():
            idx = np.flatnonzero(mesh.vertex_markers == code)
            if idx.size == 0:
                continue
            segs = domain.segments_for(name)
            far = np.full(idx.size, np.inf)
            for seg in segs:
                for i, vi in enumerate(idx):
                    _, pt = seg.curve.spline.closest_point(mesh.vertices[vi])
                    d = pt - mesh.vertices[vi]
                    far[i] = min(far[i], float(np.hypot(d[0], d[1])))
            if far.max() > BOUNDARY_TOL:
                bad = int(idx[np.argmax(far)])
                raise MeshQualityError(
                    f"boundary vertex {bad} lies {far.max():.2e} from the {name} spline"
                )


def _split_quad(tris, q00, q10, q11, q01, verts):
    """Append two triangles for the CCW quad, cutting the shorter diagonal."""
    d0 = verts[q11] - verts[q00]
    d1 = verts[q01] - verts[q10]
    if d0[0] * d0[0] + d0[1] * d0[1] <= d1[0] * d1[0] + d1[1] * d1[1]:
        tris.append((q00, q10, q11))
        tris.append((q00, q11, q01))
    else:
        tris.append((q00, q10, q01))
        tris.append((q10, q11, q01))


def mesh_eddy(domain: DomainSpec, n_radial: int, n_angular: int) -> TriangleMesh:
    """Polar-grid mesh of an eddy-kind domain.

    Reference-ellipse angles are spaced uniformly; each ray from the
    center is scaled so its outer vertex lands on the boundary spline.
    """
    if domain.kind != "eddy":
        raise ParameterError(f"mesh_eddy needs an eddy-kind domain, got {domain.kind!r}")
    if n_radial < 2 or n_angular < 8:
        raise ParameterError("need n_radial >= 2 and n_angular >= 8")

    cx, cy = domain.center
    phis = 2.0 * math.pi * np.arange(n_angular) / n_angular
    ring = domain.boundary_by_reference_angle(phis)

    # land one ray exactly on each boundary corner so the mesh polygon
    # reaches it (otherwise the cut corner degrades area convergence)
    saddle_js = []
    for s in domain.saddles:
        j = int(np.argmin(np.hypot(ring[:, 0] - s[0], ring[:, 1] - s[1])))
        ring[j] = s
        saddle_js.append(j)

    n_verts = 1 + n_radial * n_angular
    verts = np.empty((n_verts, 2))
    verts[0] = (cx, cy)
    for i in range(1, n_radial + 1):
        f = i / n_radial
        sl = slice(1 + (i - 1) * n_angular, 1 + i * n_angular)
        verts[sl, 0] = cx + f * (ring[:, 0] - cx)
        verts[sl, 1] = cy + f * (ring[:, 1] - cy)
    # outer ring lands on the boundary exactly
    verts[1 + (n_radial - 1) * n_angular :] = ring

    def vid(i, j):
        return 1 + (i - 1) * n_angular + (j % n_angular)

    tris = []
    for j in range(n_angular):
        tris.append((0, vid(1, j), vid(1, j + 1)))
    for i in range(1, n_radial):
        for j in range(n_angular):
            _split_quad(tris, vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1), verts)

    markers = np.zeros(n_verts, dtype=np.uint8)
    outer = np.arange(1 + (n_radial - 1) * n_angular, n_verts)
    markers[outer] = domain.exit_markers(verts[outer, 0], verts[outer, 1])
    for j in saddle_js:
        # corner vertices belong to both segments; tag them upper
        markers[outer[j]] = MARKER_CODE[GAMMA_UPPER]

    mesh = TriangleMesh(
        vertices=verts,
        triangles=np.asarray(tris, dtype=np.int32),
        vertex_markers=markers,
    )
    areas = mesh.signed_areas()
    if areas.min() <= 0.0:
        bad = int(np.argmin(areas))
        raise MeshQualityError(
            f"eddy map inverted triangle {bad} (area {areas[bad]:.3e}); raise the resolution"
        )
    return mesh


def mesh_jet_core(domain: DomainSpec, n_x: int, n_y: int) -> TriangleMesh:
    """Transfinite mesh of a jet-core-kind domain with periodic end columns."""
    if domain.kind != "jet_core":
        raise ParameterError(f"mesh_jet_core needs a jet_core-kind domain, got {domain.kind!r}")
    if n_x < 8 or n_y < 4:
        raise ParameterError("need n_x >= 8 and n_y >= 4")

    x_lo, x_hi = domain.x_range
    per = x_hi - x_lo
    xs = x_lo + per * np.arange(n_x + 1) / n_x
    xs[-1] = x_lo + per

    y_low = np.array([domain.boundary_y(x, GAMMA_LOWER) for x in xs[:-1]])
    y_up = np.array([domain.boundary_y(x, GAMMA_UPPER) for x in xs[:-1]])
    # right column is the left column translated by one period, exactly
    y_low = np.append(y_low, y_low[0])
    y_up = np.append(y_up, y_up[0])

    fracs = np.arange(n_y + 1) / n_y
    n_verts = (n_x + 1) * (n_y + 1)
    verts = np.empty((n_verts, 2))

    def vid(i, j):
        return i * (n_y + 1) + j

    for i in range(n_x + 1):
        sl = slice(i * (n_y + 1), (i + 1) * (n_y + 1))
        verts[sl, 0] = xs[i]
        verts[sl, 1] = y_low[i] + fracs * (y_up[i] - y_low[i])

    tris = []
    for i in range(n_x):
        for j in range(n_y):
            _split_quad(tris, vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1), verts)

    markers = np.zeros(n_verts, dtype=np.uint8)
    for i in range(n_x + 1):
        markers[vid(i, 0)] = MARKER_CODE[GAMMA_LOWER]
        markers[vid(i, n_y)] = MARKER_CODE[GAMMA_UPPER]

    pairs = np.array(
        [[vid(0, j), vid(n_x, j)] for j in range(n_y + 1)], dtype=np.int32
    )

    mesh = TriangleMesh(
        vertices=verts,
        triangles=np.asarray(tris, dtype=np.int32),
        vertex_markers=markers,
        periodic_pairs=pairs,
    )
    areas = mesh.signed_areas()
    if areas.min() <= 0.0:
        bad = int(np.argmin(areas))
        raise MeshQualityError(
            f"transfinite map inverted triangle {bad} (area {areas[bad]:.3e}); raise the resolution"
        )
    return mesh


def refine_uniform(mesh: TriangleMesh, domain: DomainSpec | None = None) -> TriangleMesh:
    """Split every triangle into four; project new boundary vertices back on."""
    edges, counts, tri_edges = mesh.edges()
    n_old = mesh.n_vertices
    mid = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    mid_markers = np.zeros(len(edges), dtype=np.uint8)

    # chain edges have both endpoints marked; periodic-side edges (one or
    # both endpoints untagged) stay unmarked and are never projected
    on_bdry = counts == 1
    vm = mesh.vertex_markers
    mixed = []
    for ei in np.flatnonzero(on_bdry):
        a, b = edges[ei]
        ma, mb = int(vm[a]), int(vm[b])
        if ma and ma == mb:
            mid_markers[ei] = ma
        elif ma and mb:
            mixed.append(ei)
    if mixed:
        mixed = np.asarray(mixed)
        if domain is not None:
            # the edge straddles a corner where two markers meet
            mid_markers[mixed] = domain.exit_markers(mid[mixed, 0], mid[mixed, 1])
            for ei in mixed:
                a, b = edges[ei]
                va, vb = mesh.vertices[a], mesh.vertices[b]
                ab = vb - va
                l2 = float(ab @ ab)
                for s in domain.saddles:
                    s = np.asarray(s)
                    fr = float((s - va) @ ab) / l2
                    if 1e-9 < fr < 1.0 - 1e-9 and min(
                        np.hypot(*(s - va)), np.hypot(*(s - vb))
                    ) > 1e-12:
                        # new vertex lands exactly on the corner
                        mid[ei] = s
                        mid_markers[ei] = MARKER_CODE[GAMMA_UPPER]
                        break
        else:
            mid_markers[mixed] = MARKER_CODE[GAMMA_UPPER]

    verts = np.vstack([mesh.vertices, mid])
    markers = np.concatenate([vm, mid_markers])

    tri = mesh.triangles
    m01 = n_old + tri_edges[:, 0]
    m12 = n_old + tri_edges[:, 1]
    m20 = n_old + tri_edges[:, 2]
    children = np.concatenate(
        [
            np.column_stack([tri[:, 0], m01, m20]),
            np.column_stack([tri[:, 1], m12, m01]),
            np.column_stack([tri[:, 2], m20, m12]),
            np.column_stack([m01, m12, m20]),
        ]
    )

    # propagate periodic pairs to the midpoints of paired column edges
    pairs = [tuple(p) for p in mesh.periodic_pairs.tolist()]
    pair_map = dict(pairs)
    new_pairs = list(pairs)
    if pair_map:
        edge_index = {(int(a), int(b)): ei for ei, (a, b) in enumerate(edges)}
        for (a, b), ei in edge_index.items():
            if a in pair_map and b in pair_map:
                ra, rb = pair_map[a], pair_map[b]
                rei = edge_index.get((min(ra, rb), max(ra, rb)))
                if rei is not None:
                    new_pairs.append((n_old + ei, n_old + rei))

    out = TriangleMesh(
        vertices=verts,
        triangles=children.astype(np.int32),
        vertex_markers=markers,
        periodic_pairs=np.asarray(new_pairs, dtype=np.int32).reshape(-1, 2),
    )

    if domain is not None:
        for code, name in CODE_MARKER.items():
            idx = np.flatnonzero(out.vertex_markers == code)
            idx = idx[idx >= n_old]
            if idx.size:
                out.vertices[idx] = domain.project_to_boundary(out.vertices[idx], name)
    return out
