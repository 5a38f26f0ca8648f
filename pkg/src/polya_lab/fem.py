"""P1 finite elements for torsion and the first Dirichlet eigenvalue in the plane.

Star domains are meshed by mapping a fixed reference triangulation of the unit
disk through x -> x (1 + H(x)), H the harmonic extension of the boundary
perturbation.  The topology depends only on the resolution, so values along a
perturbation path t -> B_{t h} are smooth in t at fixed resolution.  Polygons
go through Shewchuk's ``triangle`` (constrained Delaunay with a 20 degree
angle bound).

Every solve is repeated on the red-refined mesh and Richardson-extrapolated,
R = (4 X(l/2) - X(l)) / 3.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.spatial import Delaunay

from .geometry import DomainError, PolygonDomain, StarDomain, boundary_metrics, min_width

MAX_ELL = 0.2
MIN_ANGLE_DEG = 20.0
EIGEN_TOL = 1e-10
EIGEN_MAXITER = 500
STALL_ITERS = 60


class MeshError(DomainError):
    pass


class SolverError(RuntimeError):
    def __init__(self, msg: str, trace: list[float] | None = None):
        super().__init__(msg)
        self.trace = trace or []


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    ell: float
    # reference nodes and domain, kept so refinement can re-project onto the true boundary
    _domain: object = field(default=None, repr=False)
    _ref_nodes: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        for arr in (self.nodes, self.triangles, self.boundary):
            arr.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    def areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def min_angle(self) -> float:
        """Smallest interior angle in degrees."""
        p = self.nodes[self.triangles]
        best = math.inf
        for i in range(3):
            a = p[:, (i + 1) % 3] - p[:, i]
            b = p[:, (i + 2) % 3] - p[:, i]
            cosang = np.einsum("ij,ij->i", a, b) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
            best = min(best, float(np.degrees(np.arccos(np.clip(cosang, -1, 1))).min()))
        return best

    def refined(self) -> "Mesh":
        return red_refine(self)

    def dump_csv(self, prefix) -> tuple[str, str]:
        """Write <prefix>_nodes.csv (x, y, boundary) and <prefix>_triangles.csv (i, j, k)."""
        nodes_path, tri_path = f"{prefix}_nodes.csv", f"{prefix}_triangles.csv"
        with open(nodes_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "boundary"])
            for (x, y), b in zip(self.nodes, self.boundary):
                w.writerow([repr(float(x)), repr(float(y)), int(b)])
        with open(tri_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "j", "k"])
            w.writerows(self.triangles.tolist())
        return nodes_path, tri_path


# -- meshing ----------------------------------------------------------------


@lru_cache(maxsize=16)
def _reference_disk(n_rings: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Concentric rings of 6i points; Delaunay of this set is nearly equilateral."""
    pts = [np.zeros((1, 2))]
    for i in range(1, n_rings + 1):
        theta = 2 * np.pi * np.arange(6 * i) / (6 * i)
        pts.append((i / n_rings) * np.column_stack([np.cos(theta), np.sin(theta)]))
    nodes = np.vstack(pts)
    tri = Delaunay(nodes).simplices.astype(np.int64)
    tri = _orient(nodes, tri)
    boundary = np.zeros(nodes.shape[0], dtype=bool)
    boundary[-6 * n_rings:] = True
    for arr in (nodes, tri, boundary):
        arr.setflags(write=False)
    return nodes, tri, boundary


def _orient(nodes: np.ndarray, tri: np.ndarray) -> np.ndarray:
    p = nodes[tri]
    d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    neg = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0] < 0
    tri = tri.copy()
    tri[neg, 1], tri[neg, 2] = tri[neg, 2].copy(), tri[neg, 1].copy()
    return tri


def _map_star(domain: StarDomain, ref: np.ndarray) -> np.ndarray:
    scale = 1.0 + domain.harmonic_extension(ref[:, 0], ref[:, 1])
    return ref * scale[:, None]


def _star_mesh(domain: StarDomain, ell: float) -> Mesh:
    n_rings = max(2, math.ceil(1.0 / ell))
    ref, tri, bnd = _reference_disk(n_rings)
    nodes = _map_star(domain, ref)
    return _checked(Mesh(nodes, tri, bnd, ell, domain, ref))


def _polygon_mesh(domain: PolygonDomain, ell: float) -> Mesh:
    import triangle as tr

    if domain.convex:
        # at least four elements across the narrowest direction
        ell = min(ell, min_width(domain) / 4.0)
    v = domain.vertices
    n = v.shape[0]
    segs = np.column_stack([np.arange(n), (np.arange(n) + 1) % n])
    max_area = ell * ell * math.sqrt(3.0) / 4.0
    out = tr.triangulate({"vertices": v, "segments": segs}, f"pq{MIN_ANGLE_DEG:g}a{max_area:.15f}Q")
    nodes = np.asarray(out["vertices"], dtype=float)
    tri = _orient(nodes, np.asarray(out["triangles"], dtype=np.int64))
    bnd = np.asarray(out["vertex_markers"]).ravel() != 0
    return _checked(Mesh(nodes, tri, bnd, ell, domain, None))


def _checked(mesh: Mesh) -> Mesh:
    if np.any(mesh.areas() <= 0.0):
        raise MeshError("mapping folds the reference mesh; perturbation too large for this resolution")
    return mesh


def mesh(domain: StarDomain | PolygonDomain, ell: float) -> Mesh:
    if not 0.0 < ell <= MAX_ELL:
        raise MeshError(f"resolution must satisfy 0 < ell <= {MAX_ELL}, got {ell}")
    if boundary_metrics(domain).V < 1e-8:
        raise MeshError("degenerate domain (area below 1e-8)")
    if isinstance(domain, StarDomain):
        return _star_mesh(domain, ell)
    if isinstance(domain, PolygonDomain):
        return _polygon_mesh(domain, ell)
    raise TypeError(f"cannot mesh {type(domain).__name__}")


def red_refine(m: Mesh) -> Mesh:
    """Split every triangle into four; boundary midpoints go back onto the boundary."""
    tri = m.triangles
    edges = np.vstack([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    key = np.sort(edges, axis=1)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.ravel()
    nt = tri.shape[0]
    mid_idx = m.n_nodes + inv.reshape(3, nt).T  # columns: edge01, edge12, edge20

    on_bnd = m.boundary[uniq[:, 0]] & m.boundary[uniq[:, 1]]
    # an interior chord can join two boundary nodes; count incident triangles to tell them apart
    counts = np.bincount(inv, minlength=uniq.shape[0])
    on_bnd &= counts == 1

    ref_nodes = None
    if isinstance(m._domain, StarDomain) and m._ref_nodes is not None:
        ref_mid = 0.5 * (m._ref_nodes[uniq[:, 0]] + m._ref_nodes[uniq[:, 1]])
        r = np.linalg.norm(ref_mid[on_bnd], axis=1)
        ref_mid[on_bnd] /= r[:, None]
        ref_nodes = np.vstack([m._ref_nodes, ref_mid])
        nodes = _map_star(m._domain, ref_nodes)
    else:
        mid = 0.5 * (m.nodes[uniq[:, 0]] + m.nodes[uniq[:, 1]])
        nodes = np.vstack([m.nodes, mid])

    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    ab, bc, ca = mid_idx[:, 0], mid_idx[:, 1], mid_idx[:, 2]
    new_tri = np.vstack([
        np.column_stack([a, ab, ca]),
        np.column_stack([ab, b, bc]),
        np.column_stack([ca, bc, c]),
        np.column_stack([ab, bc, ca]),
    ])
    boundary = np.concatenate([m.boundary, on_bnd])
    return _checked(Mesh(nodes, new_tri, boundary, m.ell / 2.0, m._domain, ref_nodes))


# -- assembly ------------------------------------------------------------------


def assemble(m: Mesh) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Stiffness and consistent mass matrices for P1 elements."""
    p = m.nodes[m.triangles]
    area = m.areas()
    # gradients of barycentric coordinates: rotate opposite edges
    e0 = p[:, 2] - p[:, 1]
    e1 = p[:, 0] - p[:, 2]
    e2 = p[:, 1] - p[:, 0]
    g = np.stack([e0, e1, e2], axis=1)  # (nt, 3, 2)
    ke = np.einsum("tid,tjd->tij", g, g) / (4.0 * area)[:, None, None]
    me = (np.ones((3, 3)) + np.eye(3))[None] * (area / 12.0)[:, None, None]
    rows = np.repeat(m.triangles, 3, axis=1).ravel()
    cols = np.tile(m.triangles, (1, 3)).ravel()
    n = m.n_nodes
    K = sp.csr_matrix((ke.ravel(), (rows, cols)), shape=(n, n))
    M = sp.csr_matrix((me.ravel(), (rows, cols)), shape=(n, n))
    return K, M


def _interior_blocks(m: Mesh):
    K, M = assemble(m)
    free = np.flatnonzero(~m.boundary)
    if free.size == 0:
        raise SolverError("mesh has no interior nodes")
    Kf = K[free][:, free].tocsc()
    Mf = M[free][:, free].tocsc()
    bf = np.asarray(M[free].sum(axis=1)).ravel()
    return free, Kf, Mf, bf


def _factor(Kf: sp.csc_matrix):
    try:
        lu = spla.splu(Kf)
    except RuntimeError as exc:
        raise SolverError(f"singular stiffness matrix (disconnected mesh?): {exc}") from exc
    if not np.all(np.isfinite(lu.U.diagonal())) or np.any(lu.U.diagonal() == 0):
        raise SolverError("singular stiffness matrix (disconnected mesh?)")
    return lu.solve


def _cg_solver(Kf: sp.csc_matrix):
    diag = Kf.diagonal()
    pre = spla.LinearOperator(Kf.shape, matvec=lambda x: x / diag)

    def solve(rhs):
        x, info = spla.cg(Kf, rhs, M=pre, rtol=1e-13, maxiter=20 * Kf.shape[0])
        if info != 0:
            raise SolverError(f"conjugate gradient did not converge (info={info})")
        return x

    return solve


def _solver(Kf, method: str):
    return _factor(Kf) if method == "direct" else _cg_solver(Kf)


@dataclass(frozen=True)
class LevelResult:
    value: float
    nodal: np.ndarray = field(repr=False)
    iterations: int = 0
    residual: float = 0.0


def torsion_level(m: Mesh, method: str = "direct") -> LevelResult:
    free, Kf, _, bf = _interior_blocks(m)
    w = _solver(Kf, method)(bf)
    full = np.zeros(m.n_nodes)
    full[free] = w
    return LevelResult(value=float(bf @ w), nodal=full)


def _residual(Kf, Mf, u, lam) -> float:
    Mu = Mf @ u
    return float(np.linalg.norm(Kf @ u - lam * Mu) / (abs(lam) * np.linalg.norm(Mu)))


def eigen_level(m: Mesh, method: str = "direct", tol: float = EIGEN_TOL,
                maxiter: int = EIGEN_MAXITER) -> LevelResult:
    """Inverse iteration at shift 0, started from the torsion function.

    Thin domains have lambda_1 / lambda_2 close to 1 and stall plain inverse
    iteration; after STALL_ITERS steps the same factorisation drives a
    shift-invert Lanczos solve instead.
    """
    free, Kf, Mf, bf = _interior_blocks(m)
    solve = _solver(Kf, method)
    u = solve(bf)
    trace = []
    lam = math.nan
    converged = False
    for it in range(1, min(maxiter, STALL_ITERS) + 1):
        Mu = Mf @ u
        u = solve(Mu)
        Mu = Mf @ u
        norm = math.sqrt(float(u @ Mu))
        u /= norm
        Mu /= norm
        Ku = Kf @ u
        lam = float(u @ Ku)
        res = float(np.linalg.norm(Ku - lam * Mu) / (abs(lam) * np.linalg.norm(Mu)))
        trace.append(res)
        if res <= tol:
            converged = True
            break
    if not converged:
        op = spla.LinearOperator(Kf.shape, matvec=solve, dtype=float)
        try:
            vals, vecs = spla.eigsh(Kf, k=1, M=Mf, sigma=0.0, which="LM", OPinv=op, v0=u,
                                    maxiter=maxiter, tol=0.0)
        except spla.ArpackNoConvergence as exc:
            raise SolverError(f"eigen solve did not converge: {exc}", trace) from exc
        u = vecs[:, 0]
        u /= math.sqrt(float(u @ (Mf @ u)))
        lam = float(u @ (Kf @ u))
        res = _residual(Kf, Mf, u, lam)
        trace.append(res)
        it += 1
        if res > tol:
            raise SolverError(f"eigen residual {res:.3g} above {tol}", trace)
    if u.sum() < 0:
        u = -u
    full = np.zeros(m.n_nodes)
    full[free] = u
    return LevelResult(value=lam, nodal=full, iterations=it, residual=trace[-1])


@dataclass(frozen=True)
class PdeSolution:
    """Result at resolution l and l/2 with the Richardson value.

    ``nodal`` is the nodal solution on the coarse mesh.
    """

    kind: str
    coarse: float
    fine: float | None
    extrapolated: float | None
    ell: float
    nodal: np.ndarray = field(repr=False)
    mesh: Mesh | None = field(default=None, repr=False)

    @property
    def value(self) -> float:
        return self.extrapolated if self.extrapolated is not None else self.coarse

    @property
    def estimate(self) -> float:
        """Discretization error estimate |R - X(l/2)|."""
        if self.fine is None:
            return abs(self.coarse) * self.ell**2
        return abs(self.extrapolated - self.fine)


def _two_level(kind: str, level_fn, m: Mesh, richardson: bool, **kw) -> PdeSolution:
    coarse = level_fn(m, **kw)
    if not richardson:
        return PdeSolution(kind, coarse.value, None, None, m.ell, coarse.nodal, m)
    fine = level_fn(red_refine(m), **kw)
    ext = (4.0 * fine.value - coarse.value) / 3.0
    return PdeSolution(kind, coarse.value, fine.value, ext, m.ell, coarse.nodal, m)


def solve_torsion(m: Mesh, richardson: bool = True, method: str = "direct") -> PdeSolution:
    """T = int w, -Laplace w = 1, w = 0 on the boundary."""
    return _two_level("torsion", torsion_level, m, richardson, method=method)


def solve_eigen(m: Mesh, richardson: bool = True, method: str = "direct") -> PdeSolution:
    return _two_level("eigen", eigen_level, m, richardson, method=method)


def convergence_order(domain, ell: float, kind: str, exact: float) -> float:
    """Observed order log2(err(l) / err(l/2)) from successive red refinements."""
    m0 = mesh(domain, ell)
    level = torsion_level if kind == "torsion" else eigen_level
    e0 = abs(level(m0).value - exact)
    e1 = abs(level(red_refine(m0)).value - exact)
    return math.log2(e0 / e1)


# -- exact values ---------------------------------------------------------------


def ball_exact(m: int):
    from .functionals import ShapeMetrics
    from .modecoeffs import ball_constants

    b = ball_constants(m)
    return ShapeMetrics(T=b.T, Lam=b.Lam, P=b.P, V=b.V, m=m, provenance="exact")


def rectangle_torsion(a: float, b: float, terms: int = 400) -> float:
    """Torsional rigidity of an a x b rectangle from the double sine series."""
    idx = np.arange(1, 2 * terms, 2, dtype=float)
    i, j = np.meshgrid(idx, idx, indexing="ij")
    s = np.sum(1.0 / (i * i * j * j * (i * i / a**2 + j * j / b**2)))
    return float(64.0 * a * b / math.pi**6 * s)


def rectangle_eigen(a: float, b: float) -> float:
    return math.pi**2 * (1.0 / a**2 + 1.0 / b**2)
