"""Relaxed functionals behind the homogenization construction approaching sup G.

Cubes of side 1/n tile Omega; each carries a ball hole E_i of radius r inside the
ball B_i of radius 1/(2n), with r fixed by cap(E_i, B_i) = c / n^m.  In the limit
the holes act as the measure mu = c dx, so Lambda(Omega, mu) = c + Lambda(Omega)
while the perimeter is unchanged.  No PDE is solved on perforated sets.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

from .functionals import ShapeMetrics, sup_G
from .modecoeffs import unit_ball_volume


class InfeasibleHoleError(ValueError):
    pass


def condenser_capacity(m: int, r: float, R: float) -> float:
    """Newtonian capacity of the ball of radius r inside the concentric ball of radius R."""
    if not 0.0 < r < R:
        raise ValueError("need 0 < r < R")
    if m == 2:
        return 2 * math.pi / math.log(R / r)
    return m * unit_ball_volume(m) * (m - 2) / (r ** (2 - m) - R ** (2 - m))


def hole_radius(m: int, n: int, c: float) -> float:
    """Radius r solving cap(B_r, B_{1/(2n)}) = c / n^m."""
    if m < 2 or n < 1 or c <= 0.0:
        raise ValueError(f"need m >= 2, n >= 1, c > 0; got m={m}, n={n}, c={c}")
    R = 1.0 / (2 * n)
    if m == 2:
        r = R * math.exp(-2 * math.pi * n * n / c)
    else:
        # r^(2-m) = (2n)^(m-2) + m omega_m (m-2) n^m / c
        inv = (2.0 * n) ** (m - 2) + m * unit_ball_volume(m) * (m - 2) * n**m / c
        r = inv ** (-1.0 / (m - 2))
    if not 0.0 < r < R:
        raise InfeasibleHoleError(f"hole radius {r} not in (0, 1/(2n)) for n={n}, c={c}")
    return r


def inner_parallel_volume(shape: str, delta: float, radius: float = 1.0,
                          width: float = 1.0, height: float = 1.0, m: int = 2) -> float:
    """Volume of {x : dist(x, boundary) > delta} for a ball (disk) or an axis rectangle."""
    if shape in ("disk", "ball"):
        if not 0.0 < delta < radius:
            raise ValueError("delta must lie in (0, radius)")
        return unit_ball_volume(m) * (radius - delta) ** m
    if shape == "rectangle":
        if not 0.0 < delta < 0.5 * min(width, height):
            raise ValueError("delta must lie in (0, min side / 2)")
        return (width - 2 * delta) * (height - 2 * delta)
    raise ValueError(f"inner parallel sets only for disk and rectangle, got {shape!r}")


@dataclass(frozen=True)
class RelaxedMetrics:
    Lam_mu: float
    T_mu_lower: float
    V_delta: float


def relaxed_metrics(base: ShapeMetrics, c: float, delta: float, shape: str = "disk",
                    **dims) -> RelaxedMetrics:
    if c < 0.0:
        raise ValueError("c must be non-negative")
    if shape in ("disk", "ball"):
        dims.setdefault("m", base.m)
    vd = inner_parallel_volume(shape, delta, **dims)
    return RelaxedMetrics(Lam_mu=c + base.Lam, T_mu_lower=vd**2 / base.V / (delta**-2 + c), V_delta=vd)


@dataclass(frozen=True)
class HomogenizationPlan:
    m: int
    n: int
    c: float
    r: float
    base: ShapeMetrics
    Lam_mu: float
    T_mu_lower: float
    perimeter_bound: float


def perimeter_bound(base: ShapeMetrics, m: int, n: int, c: float) -> tuple[float, float]:
    """P(Omega) + (V + margin) n^m m omega_m r^(m-1), and the margin P sqrt(m)/n for boundary cubes."""
    r = hole_radius(m, n, c)
    margin = base.P * math.sqrt(m) / n
    bound = base.P + (base.V + margin) * n**m * m * unit_ball_volume(m) * r ** (m - 1)
    return bound, margin


def plan(base: ShapeMetrics, n: int, c: float, delta: float, shape: str = "disk", **dims) -> HomogenizationPlan:
    m = base.m
    rel = relaxed_metrics(base, c, delta, shape, **dims)
    bound, _ = perimeter_bound(base, m, n, c)
    return HomogenizationPlan(m, n, c, hole_radius(m, n, c), base, rel.Lam_mu, rel.T_mu_lower, bound)


@dataclass(frozen=True)
class CurvePoint:
    c: float
    delta: float
    lower_bound: float
    target: float

    @property
    def gap(self) -> float:
        return (self.target - self.lower_bound) / self.target


def g_lower_bound(base: ShapeMetrics, c: float, delta: float, shape: str = "disk", **dims) -> float:
    """(c + Lam) V(Omega_delta)^2 / V / (delta^-2 + c) / P^(m/(m-1)) <= lim inf G(Omega_n)."""
    rel = relaxed_metrics(base, c, delta, shape, **dims)
    return rel.Lam_mu * rel.T_mu_lower / base.P ** (base.m / (base.m - 1))


def sup_curve(base: ShapeMetrics, cs: Sequence[float], deltas: Sequence[float],
              shape: str = "disk", **dims) -> list[CurvePoint]:
    """Lower-bound curve over the (c, delta) grid; target is V/P^(m/(m-1))."""
    for grid in (cs, deltas):
        if any(b <= a for a, b in zip(grid, grid[1:])) and any(b >= a for a, b in zip(grid, grid[1:])):
            raise ValueError("grids must be monotone")
    target = base.V / base.P ** (base.m / (base.m - 1))
    return [CurvePoint(c, d, g_lower_bound(base, c, d, shape, **dims), target) for c in cs for d in deltas]


def best_delta(c: float) -> float:
    """Minimiser of the disk gap for fixed large c: (1 - delta)^4 c / (delta^-2 + c) peaks near (1/(2c))^(1/3)."""
    return (0.5 / c) ** (1.0 / 3.0)


def write_curve_csv(points: Sequence[CurvePoint], path_or_file) -> None:
    own = isinstance(path_or_file, str) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh)
        w.writerow(["c", "delta", "lower_bound", "target", "gap"])
        for p in points:
            w.writerow([p.c, p.delta, p.lower_bound, p.target, p.gap])
    finally:
        if own:
            fh.close()


def disk_target(m: int = 2) -> float:
    return sup_G(m)
