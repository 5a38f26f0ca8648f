"""Planar domains: star-shaped regions rho(theta) = 1 + h(theta) and convex polygons.

Also the convex-geometry quantities (inradius, minimal width, diameter) and the
constructors used by the experiments: nearly spherical sets, thinning
sequences and corner cuts.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class StarDomain:
    """Boundary radius rho(theta) = 1 + sum_k a_k cos(k theta) + b_k sin(k theta).

    ``harmonics`` holds (k, a_k, b_k) triples; a k = 0 entry shifts the mean radius.
    """

    harmonics: tuple[tuple[int, float, float], ...] = ()
    m: int = 2

    def __post_init__(self):
        theta = np.linspace(0.0, 2 * np.pi, self.default_samples(), endpoint=False)
        if np.any(self.rho(theta) <= 0.0):
            raise DomainError("boundary radius must stay positive")

    @classmethod
    def from_samples(cls, rho: Sequence[float]) -> "StarDomain":
        """Trigonometric interpolant of radii sampled at N uniform angles."""
        rho = np.asarray(rho, dtype=float)
        if np.any(rho <= 0.0):
            raise DomainError("boundary radius must stay positive")
        n = rho.size
        coef = np.fft.rfft(rho) / n
        harmonics = [(0, float(coef[0].real) - 1.0, 0.0)]
        for k in range(1, coef.size):
            scale = 1.0 if (n % 2 == 0 and k == n // 2) else 2.0
            harmonics.append((k, scale * float(coef[k].real), -scale * float(coef[k].imag)))
        return cls(tuple(h for h in harmonics if h[1] != 0.0 or h[2] != 0.0))

    @property
    def max_mode(self) -> int:
        return max((k for k, _, _ in self.harmonics), default=0)

    def default_samples(self) -> int:
        return max(256, 16 * self.max_mode)

    def h(self, theta, deriv: int = 0):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros_like(theta)
        for k, a, b in self.harmonics:
            if k == 0:
                if deriv == 0:
                    out = out + a
                continue
            c, s = np.cos(k * theta), np.sin(k * theta)
            if deriv == 0:
                out = out + a * c + b * s
            elif deriv == 1:
                out = out + k * (-a * s + b * c)
            elif deriv == 2:
                out = out - k * k * (a * c + b * s)
            else:
                raise ValueError("deriv must be 0, 1 or 2")
        return out

    def rho(self, theta, deriv: int = 0):
        base = 1.0 if deriv == 0 else 0.0
        return base + self.h(theta, deriv)

    def harmonic_extension(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Harmonic extension of h into the unit disk, r^k (a_k cos + b_k sin)."""
        z = x + 1j * y
        out = np.zeros_like(x, dtype=float)
        for k, a, b in self.harmonics:
            zk = z**k
            out = out + a * zk.real + b * zk.imag
        return out

    def boundary_points(self, n: int | None = None) -> np.ndarray:
        n = n or self.default_samples()
        theta = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        r = self.rho(theta)
        return np.column_stack([r * np.cos(theta), r * np.sin(theta)])

    def is_convex(self, n: int | None = None) -> bool:
        theta = np.linspace(0.0, 2 * np.pi, n or self.default_samples(), endpoint=False)
        r, r1, r2 = self.rho(theta), self.rho(theta, 1), self.rho(theta, 2)
        return bool(np.all(r * r + 2 * r1 * r1 - r * r2 > 0.0))

    def scaled(self, t: float) -> "StarDomain":
        """The domain t*Omega expressed again as 1 + h."""
        harm = [(k, t * a, t * b) for k, a, b in self.harmonics if k != 0]
        a0 = sum(a for k, a, _ in self.harmonics if k == 0)
        return StarDomain(tuple([(0, t * (1.0 + a0) - 1.0, 0.0)] + harm))

    def to_record(self) -> dict:
        return {"type": "star", "harmonics": [[int(k), float(a), float(b)] for k, a, b in self.harmonics]}


@dataclass(frozen=True)
class PolygonDomain:
    vertices: np.ndarray = field(repr=False)
    convex: bool = False

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise DomainError("polygon needs at least three (x, y) vertices")
        if _signed_area(v) < 0.0:
            v = v[::-1].copy()
        object.__setattr__(self, "vertices", v)
        if not _is_simple(v):
            raise DomainError("polygon must be simple")
        object.__setattr__(self, "convex", _is_convex(v))

    @property
    def n(self) -> int:
        return self.vertices.shape[0]

    def edges(self) -> np.ndarray:
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    def to_record(self) -> dict:
        return {"type": "polygon", "vertices": self.vertices.tolist()}

    def scaled(self, t: float) -> "PolygonDomain":
        return PolygonDomain(t * self.vertices)


def _signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _is_convex(v: np.ndarray) -> bool:
    e = np.roll(v, -1, axis=0) - v
    cr = _cross(e, np.roll(e, -1, axis=0))
    return bool(np.all(cr > 0.0))


def _segments_cross(p1, p2, q1, q2) -> bool:
    d1 = _cross(p2 - p1, q1 - p1)
    d2 = _cross(p2 - p1, q2 - p1)
    d3 = _cross(q2 - q1, p1 - q1)
    d4 = _cross(q2 - q1, p2 - q1)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def _is_simple(v: np.ndarray) -> bool:
    n = v.shape[0]
    if _is_convex(v):
        return True
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                return False
    return True


# -- constructors -------------------------------------------------------------


def nearly_spherical(k: int, amplitude: float, phase: str = "cos") -> StarDomain:
    """B_h with h = amplitude * cos(k theta) (or sin); mean and barycenter moments vanish."""
    if k < 2:
        raise DomainError("k = 0, 1 violate the volume / barycenter constraints")
    if abs(amplitude) >= 0.5:
        raise DomainError("need |amplitude| < 1/2")
    if phase not in ("cos", "sin"):
        raise DomainError(f"phase must be 'cos' or 'sin', got {phase!r}")
    if amplitude == 0.0:
        return StarDomain(())
    a, b = (amplitude, 0.0) if phase == "cos" else (0.0, amplitude)
    return StarDomain(((k, a, b),))


def regular_polygon(n: int, circumradius: float = 1.0, rotation: float = 0.0) -> PolygonDomain:
    theta = rotation + 2 * np.pi * np.arange(n) / n
    return PolygonDomain(circumradius * np.column_stack([np.cos(theta), np.sin(theta)]))


def rectangle(width: float, height: float) -> PolygonDomain:
    return PolygonDomain(np.array([[0, 0], [width, 0], [width, height], [0, height]], dtype=float))


def ellipse_polygon(a: float, b: float, n: int = 256) -> PolygonDomain:
    theta = 2 * np.pi * np.arange(n) / n
    return PolygonDomain(np.column_stack([a * np.cos(theta), b * np.sin(theta)]))


def thinning_sequence(kind: str, n: int) -> PolygonDomain:
    """Rectangle 1 x 1/n or isosceles triangle with base 1 and height 1/n."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if kind == "rectangle":
        return rectangle(1.0, 1.0 / n)
    if kind == "triangle":
        return PolygonDomain(np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 1.0 / n]]))
    raise DomainError(f"unknown thinning kind {kind!r}")


def random_convex_polygon(rng: np.random.Generator, n_points: int = 12) -> PolygonDomain:
    from scipy.spatial import ConvexHull

    while True:
        pts = rng.uniform(-1.0, 1.0, size=(n_points, 2))
        hull = ConvexHull(pts)
        v = pts[hull.vertices]
        if v.shape[0] >= 3 and _is_convex(v if _signed_area(v) > 0 else v[::-1]):
            return PolygonDomain(v)


# -- metrics ------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryMetrics:
    P: float
    V: float


def boundary_metrics(d: StarDomain | PolygonDomain, n: int | None = None) -> BoundaryMetrics:
    """Perimeter and area; trapezoid rule on the periodic star integrands is spectral."""
    if isinstance(d, PolygonDomain):
        return BoundaryMetrics(P=float(np.linalg.norm(d.edges(), axis=1).sum()), V=_signed_area(d.vertices))
    n = n or d.default_samples()
    theta = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    r, r1 = d.rho(theta), d.rho(theta, 1)
    if np.any(r <= 0.0):
        raise DomainError("boundary radius must stay positive")
    dtheta = 2 * np.pi / n
    P = float(np.sum(np.sqrt(r * r + r1 * r1)) * dtheta)
    V = float(0.5 * np.sum(r * r) * dtheta)
    return BoundaryMetrics(P=P, V=V)


def centroid(d: StarDomain | PolygonDomain, n: int | None = None) -> np.ndarray:
    if isinstance(d, PolygonDomain):
        v = d.vertices
        w = np.roll(v, -1, axis=0)
        cr = _cross(v, w)
        return ((v + w) * cr[:, None]).sum(axis=0) / (3.0 * cr.sum())
    n = n or d.default_samples()
    theta = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    r = d.rho(theta)
    area = 0.5 * np.sum(r * r)
    return np.array([np.sum(r**3 * np.cos(theta)), np.sum(r**3 * np.sin(theta))]) / (3.0 * area)


@dataclass(frozen=True)
class ConvexStats:
    P: float
    V: float
    R: float
    w: float
    d: float
    incenter: tuple[float, float] = (0.0, 0.0)

    @property
    def area_ratio(self) -> float:
        """V / (P R), between 1/2 and 1 for planar convex sets."""
        return self.V / (self.P * self.R)


def inradius(p: PolygonDomain) -> tuple[float, np.ndarray]:
    """Largest inscribed disk: max r s.t. n_i . x + r <= b_i over the edge half-planes."""
    v = p.vertices
    e = p.edges()
    normals = np.column_stack([e[:, 1], -e[:, 0]]) / np.linalg.norm(e, axis=1)[:, None]
    b = np.einsum("ij,ij->i", normals, v)
    a_ub = np.column_stack([normals, np.ones(p.n)])
    res = linprog(c=[0.0, 0.0, -1.0], A_ub=a_ub, b_ub=b, bounds=[(None, None), (None, None), (0, None)],
                  method="highs")
    if not res.success:
        raise DomainError(f"inradius LP failed: {res.message}")
    return float(res.x[2]), res.x[:2]


def min_width(p: PolygonDomain) -> float:
    """Rotating calipers: the minimal width is attained with one edge flush to a caliper."""
    v = p.vertices
    n = p.n
    best = math.inf
    j = 1
    for i in range(n):
        a, b = v[i], v[(i + 1) % n]
        e = b - a
        length = math.hypot(*e)

        def dist(idx):
            return _cross(e, v[idx % n] - a) / length

        # advance the antipodal pointer while the distance grows
        while dist(j + 1) >= dist(j):
            j += 1
        best = min(best, dist(j))
    return float(best)


def diameter(p: PolygonDomain) -> float:
    v = p.vertices
    diff = v[:, None, :] - v[None, :, :]
    return float(np.sqrt((diff**2).sum(axis=-1)).max())


def convex_stats(p: PolygonDomain) -> ConvexStats:
    if not p.convex:
        raise DomainError("convex_stats needs a convex polygon")
    bm = boundary_metrics(p)
    R, c = inradius(p)
    return ConvexStats(P=bm.P, V=bm.V, R=R, w=min_width(p), d=diameter(p), incenter=(float(c[0]), float(c[1])))


def inradius_lower_factor(m: int) -> float:
    """Constant c(m) in R >= c(m) * w."""
    return math.sqrt(m + 2) / (2 * m + 2) if m % 2 == 0 else 1.0 / (2 * math.sqrt(m))


def diameter_ratio(stats: ConvexStats, m: int = 2) -> float:
    """d * V^(m-2) / P^(m-1); bounded above by a dimensional constant."""
    return stats.d * stats.V ** (m - 2) / stats.P ** (m - 1)


# -- corner cutting ----------------------------------------------------------


@dataclass(frozen=True)
class CornerCut:
    domain: PolygonDomain
    opening: float
    perimeter_drop: float

    def drop_lower_bound(self, eps: float) -> float:
        return 2.0 * eps * (1.0 - math.sin(self.opening / 2.0))


def corner_cut(p: PolygonDomain, vertex_index: int, eps: float) -> CornerCut:
    """Remove {x : (x - v) . nu <= eps}, nu the interior bisector at vertex v."""
    if eps <= 0.0:
        raise DomainError("eps must be positive")
    v = p.vertices
    n = p.n
    i = vertex_index % n
    o, prev, nxt = v[i], v[i - 1], v[(i + 1) % n]
    u1 = (prev - o) / np.linalg.norm(prev - o)
    u2 = (nxt - o) / np.linalg.norm(nxt - o)
    nu = u1 + u2
    nu /= np.linalg.norm(nu)
    reach = min(float(np.dot(prev - o, nu)), float(np.dot(nxt - o, nu)))
    if eps >= reach:
        raise DomainError(f"eps={eps} too large for this corner (must be < {reach:.6g})")
    a_pt = o + u1 * eps / float(np.dot(u1, nu))
    b_pt = o + u2 * eps / float(np.dot(u2, nu))
    new = np.vstack([v[:i], a_pt, b_pt, v[i + 1:]]) if i > 0 else np.vstack([b_pt, v[1:], a_pt])
    cut = PolygonDomain(new)
    opening = math.acos(max(-1.0, min(1.0, float(np.dot(u1, u2)))))
    drop = boundary_metrics(p).P - boundary_metrics(cut).P
    return CornerCut(domain=cut, opening=opening, perimeter_drop=drop)


# -- domain file format ------------------------------------------------------


def domain_from_record(rec: dict) -> StarDomain | PolygonDomain:
    kind = rec.get("type")
    if kind == "star":
        harm = rec.get("harmonics")
        if not isinstance(harm, list):
            raise DomainError("star record needs a 'harmonics' list")
        triples = []
        for item in harm:
            if len(item) != 3:
                raise DomainError("each harmonic is [k, a_k, b_k]")
            k, a, b = item
            if int(k) != k or k < 0:
                raise DomainError("harmonic index must be a non-negative integer")
            triples.append((int(k), float(a), float(b)))
        return StarDomain(tuple(triples))
    if kind == "polygon":
        verts = rec.get("vertices")
        if not isinstance(verts, list):
            raise DomainError("polygon record needs a 'vertices' list")
        return PolygonDomain(np.asarray(verts, dtype=float))
    raise DomainError(f"unknown domain type {kind!r}")


def load_domain(path) -> StarDomain | PolygonDomain:
    with open(path) as fh:
        try:
            rec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DomainError(f"malformed domain file: {exc}") from exc
    if not isinstance(rec, dict):
        raise DomainError("domain file must hold a JSON object")
    return domain_from_record(rec)
