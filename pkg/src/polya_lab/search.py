"""Maximiser search for G over convex planar domains, corner cutting, thinning scans."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import ConvexHull
from scipy.spatial.distance import directed_hausdorff

from .fem import MeshError
from .functionals import Name, ShapeMetrics, evaluate, metrics_from_fem
from .geometry import (DomainError, PolygonDomain, StarDomain, boundary_metrics, centroid,
                       corner_cut, thinning_sequence)

REJECTED = 1.0  # objective value (-G) for infeasible iterates; G < 1/(4 pi) always
POLISH_STEP = 1e-3


@dataclass(frozen=True)
class SearchConfig:
    parametrization: str = "star_harmonics"  # or "polygon_vertices"
    size: int = 4  # highest harmonic K, or number of vertices n
    optimizer: str = "nelder_mead"  # or "coordinate_descent"
    perimeter_target: float = 2 * math.pi
    convexity: str = "rejection"  # or "projection"
    budget: int = 2000
    seeds: tuple[int, ...] = (0, 1, 2)
    ell: float = 0.05
    polish_ell: float = 0.025
    polish_budget: int = 60
    init_scale: float = 0.05
    xatol: float = 1e-5
    fatol: float = 1e-10
    threads: int = 1

    def __post_init__(self):
        if self.parametrization not in ("star_harmonics", "polygon_vertices"):
            raise ValueError(f"unknown parametrization {self.parametrization!r}")
        if self.optimizer not in ("nelder_mead", "coordinate_descent"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.convexity not in ("rejection", "projection"):
            raise ValueError(f"unknown convexity handling {self.convexity!r}")
        if self.parametrization == "star_harmonics" and self.size < 2:
            raise ValueError("star search needs K >= 2")
        if self.parametrization == "polygon_vertices" and self.size < 3:
            raise ValueError("polygon search needs n >= 3")

    @classmethod
    def from_dict(cls, d: dict) -> "SearchConfig":
        d = dict(d)
        if "seeds" in d:
            d["seeds"] = tuple(int(s) for s in d["seeds"])
        return cls(**d)


# -- parametrizations ---------------------------------------------------------


def star_from_params(x: np.ndarray, K: int) -> StarDomain:
    """x = (a_2, b_2, ..., a_K, b_K); modes 0 and 1 are fixed by scale and translation invariance."""
    harm = tuple((k, float(x[2 * (k - 2)]), float(x[2 * (k - 2) + 1])) for k in range(2, K + 1))
    return StarDomain(harm)


def star_params(d: StarDomain, K: int) -> np.ndarray:
    x = np.zeros(2 * (K - 1))
    for k, a, b in d.harmonics:
        if 2 <= k <= K:
            x[2 * (k - 2)], x[2 * (k - 2) + 1] = a, b
    return x


def polygon_from_params(x: np.ndarray, project: bool) -> PolygonDomain:
    v = np.asarray(x, dtype=float).reshape(-1, 2)
    if project:
        hull = ConvexHull(v)
        v = v[hull.vertices]
    return PolygonDomain(v)


def normalize_perimeter(d, target: float):
    return d.scaled(target / boundary_metrics(d).P)


def boundary_samples(d, n: int = 2048) -> np.ndarray:
    if isinstance(d, StarDomain):
        return d.boundary_points(n)
    v = d.vertices
    w = np.roll(v, -1, axis=0)
    lengths = np.linalg.norm(w - v, axis=1)
    s = np.linspace(0.0, lengths.sum(), n, endpoint=False)
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    idx = np.searchsorted(cum, s, side="right") - 1
    frac = (s - cum[idx]) / lengths[idx]
    return v[idx] + frac[:, None] * (w[idx] - v[idx])


def disk_distance(d, n: int = 2048) -> float:
    """Hausdorff distance between the boundary of d (scaled to P = 2 pi) and the unit circle at its centroid."""
    d = normalize_perimeter(d, 2 * math.pi)
    pts = boundary_samples(d, n) - centroid(d)
    theta = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    circle = np.column_stack([np.cos(theta), np.sin(theta)])
    return float(max(directed_hausdorff(pts, circle)[0], directed_hausdorff(circle, pts)[0]))


# -- objective ------------------------------------------------------------------


@dataclass
class _Objective:
    config: SearchConfig
    ell: float
    evaluations: int = 0
    best_value: float = -math.inf
    best_domain: object = None
    best_metrics: ShapeMetrics | None = None
    trajectory: list[tuple[int, float, float]] = field(default_factory=list)

    def domain(self, x):
        cfg = self.config
        if cfg.parametrization == "star_harmonics":
            d = star_from_params(x, cfg.size)
            if not d.is_convex():
                if cfg.convexity == "rejection":
                    return None
                raise DomainError("projection is only available for polygon vertices")
        else:
            d = polygon_from_params(x, project=cfg.convexity == "projection")
            if not d.convex:
                return None
        return normalize_perimeter(d, cfg.perimeter_target)

    def __call__(self, x) -> float:
        self.evaluations += 1
        try:
            d = self.domain(x)
        except (DomainError, ValueError):
            d = None
        if d is None:
            self.trajectory.append((self.evaluations, math.nan, self.best_value))
            return REJECTED
        try:
            mt = metrics_from_fem(d, self.ell)
        except (MeshError, DomainError):
            self.trajectory.append((self.evaluations, math.nan, self.best_value))
            return REJECTED
        g = evaluate(Name.G, mt).value
        if g > self.best_value:
            self.best_value, self.best_domain, self.best_metrics = g, d, mt
        self.trajectory.append((self.evaluations, g, self.best_value))
        return -g


def _compass(fun, x0, budget: int, step: float, xatol: float) -> tuple[np.ndarray, bool]:
    """Coordinate descent with step halving; returns (x, converged)."""
    x = np.array(x0, dtype=float)
    fx = fun(x)
    used = 1
    while step > xatol:
        improved = False
        for i in range(x.size):
            for sgn in (1.0, -1.0):
                if used >= budget:
                    return x, False
                y = x.copy()
                y[i] += sgn * step
                fy = fun(y)
                used += 1
                if fy < fx:
                    x, fx, improved = y, fy, True
                    break
        if not improved:
            step *= 0.5
    return x, True


@dataclass(frozen=True)
class SearchResult:
    seed: int
    best_domain: object = field(repr=False)
    best_G: float = 0.0
    best_tol: float = 0.0
    disk_distance: float = math.inf
    evaluations: int = 0
    converged: bool = False
    message: str = ""
    trajectory: tuple[tuple[int, float, float], ...] = field(default=(), repr=False)

    def write_trajectory(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["evaluation", "G", "best_G"])
            w.writerows(self.trajectory)


@dataclass(frozen=True)
class MultiSearchResult:
    runs: tuple[SearchResult, ...]

    @property
    def best(self) -> SearchResult:
        return max(self.runs, key=lambda r: r.best_G)


def _initial_point(cfg: SearchConfig, rng: np.random.Generator, start=None) -> np.ndarray:
    if start is not None:
        if cfg.parametrization == "star_harmonics":
            return star_params(start, cfg.size)
        return _polygon_seed(start, cfg.size)
    if cfg.parametrization == "star_harmonics":
        return rng.normal(scale=cfg.init_scale, size=2 * (cfg.size - 1))
    n = cfg.size
    theta = 2 * np.pi * np.arange(n) / n + rng.normal(scale=cfg.init_scale, size=n)
    r = 1.0 + rng.normal(scale=cfg.init_scale, size=n)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)]).ravel()


def _polygon_seed(start: PolygonDomain, n: int) -> np.ndarray:
    """n points spread along the boundary of ``start`` (its corners included when n allows)."""
    v = start.vertices
    if n <= v.shape[0]:
        return v[:n].ravel()
    pts = boundary_samples(start, 4 * n)
    extra = pts[np.linspace(0, pts.shape[0], n - v.shape[0], endpoint=False).astype(int) + 1]
    allpts = np.vstack([v, extra])
    c = allpts.mean(axis=0)
    order = np.argsort(np.arctan2(allpts[:, 1] - c[1], allpts[:, 0] - c[0]))
    return allpts[order].ravel()


def _run_seed(cfg: SearchConfig, seed: int, start=None) -> SearchResult:
    rng = np.random.default_rng(seed)
    x0 = _initial_point(cfg, rng, start)
    obj = _Objective(cfg, cfg.ell)
    converged = False
    if cfg.optimizer == "nelder_mead":
        simplex_step = cfg.init_scale if cfg.parametrization == "star_harmonics" else 0.1
        init = np.vstack([x0] + [x0 + simplex_step * e for e in np.eye(x0.size)])
        res = minimize(obj, x0, method="Nelder-Mead",
                       options={"maxfev": cfg.budget, "xatol": cfg.xatol, "fatol": cfg.fatol,
                                "initial_simplex": init, "adaptive": x0.size > 6})
        converged = bool(res.success)
        x_best = res.x
    else:
        x_best, converged = _compass(obj, x0, cfg.budget, cfg.init_scale, cfg.xatol)
    message = "converged" if converged else "budget exhausted before stationarity"
    if obj.best_domain is None:
        return SearchResult(seed, None, -math.inf, message="no feasible iterate",
                            trajectory=tuple(obj.trajectory), evaluations=obj.evaluations)
    # polish: short restart at the finer resolution from the best coarse iterate
    polish = _Objective(cfg, cfg.polish_ell)
    if cfg.polish_budget > 0:
        xb = (star_params(obj.best_domain, cfg.size) if cfg.parametrization == "star_harmonics"
              else obj.best_domain.vertices.ravel())
        if cfg.parametrization == "star_harmonics":
            # undo the perimeter normalisation: parameters are relative to radius 1
            xb = xb / (1.0 + sum(a for k, a, _ in obj.best_domain.harmonics if k == 0))
        if cfg.parametrization == "polygon_vertices" and xb.size != x_best.size:
            xb = x_best
        minimize(polish, xb, method="Nelder-Mead",
                 options={"maxfev": cfg.polish_budget, "xatol": cfg.xatol, "fatol": cfg.fatol,
                          "initial_simplex": np.vstack([xb] + [xb + POLISH_STEP * e for e in np.eye(xb.size)])})
    final = polish if polish.best_domain is not None else obj
    tol = evaluate(Name.G, final.best_metrics).rel_tol * final.best_value
    return SearchResult(
        seed=seed, best_domain=final.best_domain, best_G=final.best_value, best_tol=tol,
        disk_distance=disk_distance(final.best_domain), evaluations=obj.evaluations + polish.evaluations,
        converged=converged, message=message, trajectory=tuple(obj.trajectory + polish.trajectory),
    )


def maximize_G(config: SearchConfig = SearchConfig(), start=None) -> MultiSearchResult:
    """Multi-seed derivative-free ascent of G; ``start`` optionally fixes the initial domain."""
    if config.threads > 1 and len(config.seeds) > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as ex:
            runs = list(ex.map(lambda s: _run_seed(config, s, start), config.seeds))
    else:
        runs = [_run_seed(config, s, start) for s in config.seeds]
    return MultiSearchResult(tuple(runs))


# -- corner cutting ----------------------------------------------------------------


class UnresolvedGainError(RuntimeError):
    def __init__(self, msg: str, min_eps: float):
        super().__init__(msg)
        self.min_eps = min_eps


@dataclass(frozen=True)
class CornerCutRow:
    eps: float
    G: float
    gain: float  # (G(Omega_eps) - G(Omega)) / G(Omega)
    perimeter_drop: float
    drop_bound: float
    tol: float


@dataclass(frozen=True)
class CornerCutExperiment:
    base_G: float
    opening: float
    perimeter: float
    rows: tuple[CornerCutRow, ...]
    slope: float

    @property
    def predicted_slope(self) -> float:
        """Relative first-order gain 4 (1 - sin(beta/2)) / P."""
        return 4.0 * (1.0 - math.sin(self.opening / 2.0)) / self.perimeter


def corner_cut_experiment(p: PolygonDomain, eps_grid: Sequence[float], vertex: int = 0,
                          ell: float = 0.02) -> CornerCutExperiment:
    base = metrics_from_fem(p, ell)
    g0 = evaluate(Name.G, base)
    rows = []
    opening = math.nan
    for eps in eps_grid:
        cut = corner_cut(p, vertex, eps)
        opening = cut.opening
        mt = metrics_from_fem(cut.domain, ell)
        g = evaluate(Name.G, mt)
        tol = g.rel_tol + g0.rel_tol
        gain = (g.value - g0.value) / g0.value
        if abs(gain) <= tol:
            raise UnresolvedGainError(f"gain {gain:.3g} at eps={eps} below fem tolerance {tol:.3g}",
                                      min_eps=eps * tol / max(abs(gain), 1e-300))
        rows.append(CornerCutRow(eps, g.value, gain, cut.perimeter_drop, cut.drop_lower_bound(eps), tol))
    eps = np.array([r.eps for r in rows])
    gains = np.array([r.gain for r in rows])
    # gain = s eps + b eps^2; least squares through the origin
    A = np.column_stack([eps, eps**2]) if eps.size >= 2 else eps[:, None]
    coef = np.linalg.lstsq(A, gains, rcond=None)[0]
    return CornerCutExperiment(g0.value, opening, boundary_metrics(p).P, tuple(rows), float(coef[0]))


# -- thinning regimes ----------------------------------------------------------------


@dataclass(frozen=True)
class RegimeRow:
    q: float
    n: int
    G_q: float
    lower: float
    upper: float

    @property
    def within(self) -> bool:
        return self.lower < self.G_q < self.upper


@dataclass(frozen=True)
class RegimeScan:
    rows: tuple[RegimeRow, ...]

    def for_q(self, q: float) -> list[RegimeRow]:
        return [r for r in self.rows if abs(r.q - q) < 1e-12]

    def trend(self, q: float) -> str:
        vals = [r.G_q for r in self.for_q(q)]
        diffs = np.diff(vals)
        if np.all(diffs > 0):
            return "increasing"
        if np.all(diffs < 0):
            return "decreasing"
        return "mixed"


def gq_convex_bounds(q: float, P: float, V: float, m: int = 2) -> tuple[float, float]:
    """Sandwich for G_q on convex sets from the Polya and eigenvalue-perimeter bounds (epsilon = 0)."""
    iso = P ** (m / (m - 1)) / V
    lower = (math.pi**2 / (4 * m * (m + 2))) ** q * (math.pi**2 / (4 * m * m)) ** (1 - q) * iso ** (2 - 3 * q)
    upper = (math.pi**2 / 4) ** (1 - q) * iso ** (2 - 3 * q)
    return lower, upper


def thinning_metrics(ns: Sequence[int], kind: str = "rectangle", ell: float = 0.03) -> list[ShapeMetrics]:
    return [metrics_from_fem(thinning_sequence(kind, n), ell, label=f"{kind}-{n}") for n in ns]


def regime_scan(qs: Sequence[float] = (0.4, 0.5, 2 / 3, 0.8, 1.0), ns: Sequence[int] = (1, 2, 4, 8, 16, 32),
                ell: float = 0.03, metrics: Sequence[ShapeMetrics] | None = None) -> RegimeScan:
    metrics = list(metrics) if metrics is not None else thinning_metrics(ns, ell=ell)
    rows = []
    for q in qs:
        for n, mt in zip(ns, metrics):
            lo, hi = gq_convex_bounds(q, mt.P, mt.V, mt.m)
            rows.append(RegimeRow(q, n, evaluate(Name.G_q, mt, q).value, lo, hi))
    return RegimeScan(tuple(rows))
