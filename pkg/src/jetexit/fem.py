"""P1 finite elements for stationary advection-diffusion exit problems.

The solved equation is

    -diffusion * lap(phi) - velocity . grad(phi) = rhs

with Dirichlet data on the marked boundary chains and (optionally)
periodic identification of paired vertices.  With ``rhs = 0`` and data
1 / 0 on the two chains the solution is the probability of exiting
through the "1" chain; with ``rhs = 1`` and zero data it is the mean
exit time of the diffusion with drift ``velocity``.

Advection is integrated with the three-midpoint rule and stabilized by
streamline upwinding (SUPG) with the standard coth parameter, which
matters once the cell Peclet number is large (the jet flow at
diffusion ~ 1e-3 reaches Pe ~ 1e2 on production meshes).

Every assembled operator annihilates constants (all row sums vanish
before boundary conditions), so complementary exit probabilities sum
to one up to solver tolerance, not up to discretization error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.spatial import cKDTree

from .errors import SolverError
from .meshing import TriangleMesh

DIRECT_SOLVE_LIMIT = 200_000


def _triangle_geometry(mesh):
    """Areas, P1 gradients and edge midpoints for every triangle."""
    c = mesh.triangle_corners()
    d1 = c[:, 1] - c[:, 0]
    d2 = c[:, 2] - c[:, 0]
    area = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    grads = np.empty((len(c), 3, 2))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        grads[:, i, 0] = c[:, j, 1] - c[:, k, 1]
        grads[:, i, 1] = c[:, k, 0] - c[:, j, 0]
    grads /= (2.0 * area)[:, None, None]
    mids = np.empty((len(c), 3, 2))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        mids[:, i] = 0.5 * (c[:, j] + c[:, k])  # midpoint opposite corner i
    return area, grads, mids


def _tau_supg(speed, h, diffusion):
    """Streamline stabilization time scale, smooth through Pe -> 0."""
    pe = speed * h / (2.0 * diffusion)
    tau = np.empty_like(pe)
    small = pe < 1e-4
    # coth(Pe) - 1/Pe = Pe/3 - Pe^3/45 + O(E^5)
    pes = pe[small]
    tau[small] = (h[small] ** 2 / (12.0 * diffusion)) * (1.0 - pes * pes / 15.0)
    big = ~small
    with np.errstate(over="ignore"):
        xi = 1.0 / np.tanh(pe[big]) - 1.0 / pe[big]
    tau[big] = h[big] / (2.0 * speed[big]) * xi
    return tau


def assemble_system(
    mesh: TriangleMesh,
    diffusion: float,
    velocity_fn=None,
    rhs=0.0,
    supg: bool = True,
):
    """Stiffness + advection (+ SUPG) matrix and load vector.

    ``velocity_fn(x, y) -> (u, v)`` may be None for pure diffusion.
    ``rhs`` is a constant or a callable of (x, y) arrays.
    """
    n = mesh.n_vertices
    tri = mesh.triangles
    area, grads, mids = _triangle_geometry(mesh)

    blocks = np.zeros((len(tri), 3, 3))
    for i in range(3):
        for j in range(3):
            gij = grads[:, i, 0] * grads[:, j, 0] + grads[:, i, 1] * grads[:, j, 1]
            blocks[:, i, j] = diffusion * area * gij

    if callable(rhs):
        r_mid = np.stack([rhs(mids[:, i, 0], mids[:, i, 1]) for i in range(3)], axis=1)
    else:
        r_mid = np.full((len(tri), 3), float(rhs))
    # int r lambda_i by the midpoint rule: lambda_i = 1/2 off its opposite edge
    load = (area[:, None] / 6.0) * (r_mid.sum(axis=1, keepdims=True) - r_mid)

    if velocity_fn is not None:
        u_mid = np.empty((len(tri), 3))
        v_mid = np.empty((len(tri), 3))
        for i in range(3):
            u_mid[:, i], v_mid[:, i] = velocity_fn(mids[:, i, 0], mids[:, i, 1])

        # advection term: -int (a . grad phi) v, midpoint rule
        adg = np.empty((len(tri), 3, 3))  # (a . grad lambda_j) at midpoint m
        for m in range(3):
            for j in range(3):
                adg[:, m, j] = u_mid[:, m] * grads[:, j, 0] + v_mid[:, m] * grads[:, j, 1]
        s = adg.sum(axis=1)
        for i in range(3):
            blocks[:, i, :] -= (area[:, None] / 6.0) * (s - adg[:, i, :])

        if supg:
            uc = u_mid.mean(axis=1)
            vc = v_mid.mean(axis=1)
            speed = np.hypot(uc, vc)
            h = mesh.edge_lengths().max(axis=1)
            tau = np.where(
                speed > 0.0, _tau_supg(np.maximum(speed, 1e-300), h, diffusion), 0.0
            )
            cg = uc[:, None] * grads[:, :, 0] + vc[:, None] * grads[:, :, 1]
            w = tau * area
            for i in range(3):
                for j in range(3):
                    blocks[:, i, j] += w * cg[:, i] * cg[:, j]
            r_c = r_mid.mean(axis=1)
            load -= (w * r_c)[:, None] * cg

    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    a_mat = sp.coo_matrix(
        (blocks.ravel(), (rows, cols)), shape=(n, n)
    ).tocsr()

    b = np.zeros(n)
    np.add.at(b, tri.ravel(), load.ravel())
    return a_mat, b


@dataclass
class PeriodicReduction:
    """Maps between full vertex numbering and periodic-merged unknowns."""

    full_to_reduced: np.ndarray
    n_reduced: int
    prolongation: sp.csr_matrix

    def reduce_matrix(self, a_mat):
        p = self.prolongation
        return (p.T @ a_mat @ p).tocsr()

    def reduce_vector(self, b):
        return self.prolongation.T @ b

    def expand(self, x_red):
        return x_red[self.full_to_reduced]


def periodic_reduction(mesh: TriangleMesh) -> PeriodicReduction:
    """Identify periodic pairs (right vertex folded onto its left partner)."""
    n = mesh.n_vertices
    rep = np.arange(n)
    if mesh.periodic_pairs.size:
        rep[mesh.periodic_pairs[:, 1]] = mesh.periodic_pairs[:, 0]
    keep = np.flatnonzero(rep == np.arange(n))
    idx = np.full(n, -1, dtype=np.int64)
    idx[keep] = np.arange(len(keep))
    col = idx[rep]
    p = sp.csr_matrix(
        (np.ones(n), (np.arange(n), col)), shape=(n, len(keep))
    )
    return PeriodicReduction(full_to_reduced=col, n_reduced=len(keep), prolongation=p)


def dirichlet_values(mesh: TriangleMesh, data: dict, reduction=None):
    """Constrained dof indices and their values in (reduced) numbering.

    ``data`` maps marker codes (or names via domains.MARKER_CODE upstream)
    to a constant or a callable of (x, y).
    """
    if reduction is None:
        coords = mesh.vertices
        markers = mesh.vertex_markers
    else:
        # representative coordinates (first merged vertex wins) and the
        # strongest marker over each merged group
        coords = np.zeros((reduction.n_reduced, 2))
        coords[reduction.full_to_reduced[::-1]] = mesh.vertices[::-1]
        markers = np.zeros(reduction.n_reduced, dtype=np.uint8)
        np.maximum.at(markers, reduction.full_to_reduced, mesh.vertex_markers)

    dofs = []
    vals = []
    for code, g in data.items():
        idx = np.flatnonzero(markers == code)
        if idx.size == 0:
            continue
        if callable(g):
            v = np.asarray(g(coords[idx, 0], coords[idx, 1]), dtype=float)
        else:
            v = np.full(idx.size, float(g))
        dofs.append(idx)
        vals.append(v)
    if not dofs:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    return np.concatenate(dofs), np.concatenate(vals)


def apply_dirichlet(a_mat, b, dofs, values):
    """Symmetric elimination of constrained dofs; returns (A, b)."""
    n = a_mat.shape[0]
    g = np.zeros(n)
    g[dofs] = values
    keep = np.ones(n)
    keep[dofs] = 0.0
    b_new = keep * (b - a_mat @ g)
    b_new[dofs] = values
    d_keep = sp.diags(keep)
    a_new = d_keep @ a_mat @ d_keep + sp.diags(1.0 - keep)
    return a_new.tocsr(), b_new


def solve_linear(a_mat, b, *, direct_limit: int = DIRECT_SOLVE_LIMIT, rtol: float = 1e-10):
    """Sparse solve with a residual check; direct below ``direct_limit`` dofs."""
    n = a_mat.shape[0]
    if n <= direct_limit:
        x = spla.spsolve(a_mat.tocsc(), b)
    else:
        ilu = spla.spilu(a_mat.tocsc(), drop_tol=1e-5, fill_factor=20)
        pre = spla.LinearOperator((n, n), ilu.solve)
        history = []
        kw = dict(
            M=pre,
            atol=0.0,
            maxiter=400,
            restart=200,
            callback=lambda r: history.append(float(r)),
            callback_type="pr_norm",
        )
        try:
            x, info = spla.gmres(a_mat, b, rtol=1e-12, **kw)
        except TypeError:  # older scipy spells the tolerance differently
            x, info = spla.gmres(a_mat, b, tol=1e-12, **kw)
        if info != 0:
            raise SolverError(
                f"GMRES did not converge (info={info})", residual_history=history
            )
    scale = float(np.linalg.norm(b))
    res = float(np.linalg.norm(a_mat @ x - b))
    if res > rtol * max(scale, 1.0):
        raise SolverError(
            f"solution residual {res:.3e} exceeds {rtol:.1e} * max(|b|, 1)",
            residual_history=[res],
        )
    return x


def solve_linear_multi(a_mat, bs, *, direct_limit: int = DIRECT_SOLVE_LIMIT, rtol: float = 1e-10):
    """Solve one matrix against several right-hand sides.

    Below the direct limit the LU factorization is shared; above it
    each side falls back to the preconditioned iteration.
    """
    n = a_mat.shape[0]
    if n > direct_limit:
        return [solve_linear(a_mat, b, direct_limit=direct_limit, rtol=rtol) for b in bs]
    lu = spla.splu(a_mat.tocsc())
    out = []
    for b in bs:
        x = lu.solve(b)
        res = float(np.linalg.norm(a_mat @ x - b))
        if res > rtol * max(float(np.linalg.norm(b)), 1.0):
            raise SolverError(
                f"solution residual {res:.3e} exceeds {rtol:.1e} * max(|b|, 1)",
                residual_history=[res],
            )
        out.append(x)
    return out


def integrate(mesh: TriangleMesh, nodal: np.ndarray) -> float:
    """Integral of a P1 field (exact)."""
    area, _, _ = _triangle_geometry(mesh)
    return float((area * nodal[mesh.triangles].mean(axis=1)).sum())


def l2_error(mesh: TriangleMesh, nodal: np.ndarray, exact) -> float:
    """L2 distance between a P1 field and a callable, midpoint quadrature."""
    area, _, mids = _triangle_geometry(mesh)
    vals = nodal[mesh.triangles]
    err2 = np.zeros(len(area))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        uh = 0.5 * (vals[:, j] + vals[:, k])
        du = uh - exact(mids[:, i, 0], mids[:, i, 1])
        err2 += du * du
    return float(np.sqrt((area / 3.0 * err2).sum()))


@dataclass
class ScalarField:
    """Nodal P1 field bound to its mesh, with point sampling and export."""

    mesh: TriangleMesh
    values: np.ndarray
    name: str = "field"
    meta: dict | None = None
    _tree: object = field(default=None, repr=False, compare=False)
    _areas: np.ndarray | None = field(default=None, repr=False, compare=False)

    def _locator(self):
        if self._tree is None:
            c = self.mesh.triangle_corners().mean(axis=1)
            self._tree = cKDTree(c)
        return self._tree

    def sample(self, points):
        """Barycentric interpolation at points inside the mesh."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        tree = self._locator()
        k = min(24, self.mesh.n_triangles)
        _, cand = tree.query(pts, k=k)
        cand = np.atleast_2d(cand)
        c = self.mesh.triangle_corners()
        out = np.empty(len(pts))
        for i, q in enumerate(pts):
            found = False
            best = (-np.inf, None, None)
            for t in cand[i]:
                a, bb, cc = c[t]
                det = (bb[0] - a[0]) * (cc[1] - a[1]) - (bb[1] - a[1]) * (cc[0] - a[0])
                l1 = ((q[0] - a[0]) * (cc[1] - a[1]) - (q[1] - a[1]) * (cc[0] - a[0])) / det
                l2 = ((bb[0] - a[0]) * (q[1] - a[1]) - (bb[1] - a[1]) * (q[0] - a[0])) / det
                l0 = 1.0 - l1 - l2
                low = min(l0, l1, l2)
                if low > best[0]:
                    best = (low, t, (l0, l1, l2))
                if low >= -1e-12:
                    found = True
                    break
            low, t, lam = best
            if not found and low < -1e-6:
                raise ValueError(
                    f"sample point {q.tolist()} is not inside the mesh (defect {low:.2e})"
                )
            lam = np.clip(lam, 0.0, 1.0)
            vtx = self.mesh.triangles[t]
            out[i] = float(np.dot(lam, self.values[vtx]) / lam.sum())
        return out if len(out) > 1 else float(out[0])

    def integral(self):
        return integrate(self.mesh, self.values)

    def minmax(self):
        return float(self.values.min()), float(self.values.max())

    def to_dict(self):
        return {
            "name": self.name,
            "mesh_sha256": self.mesh.sha256(),
            "values": self.values.tolist(),
        }

    def save_json(self, path):
        import json

        with open(path, "w") as f:
            json.dump(self.to_dict(), f)

    def save_csv(self, path):
        with open(path, "w") as f:
            f.write(f"# field: {self.name}\n")
            f.write(f"# mesh_sha256: {self.mesh.sha256()}\n")
            f.write("x,y,value\n")
            for (x, y), v in zip(self.mesh.vertices, self.values):
                f.write(f"{float(x)!r},{float(y)!r},{float(v)!r}\n")
