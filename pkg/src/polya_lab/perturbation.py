"""Finite-difference checks of the second shape derivatives at the disk.

Along rho(theta) = 1 + t cos(k theta)/sqrt(pi) the harmonic has unit L2 norm, so
g''(0) equals the analytic mode value with phi_{k,l}^2 = 1.  Every g(t) is an
l-Richardson fem value; the second difference is then Richardson-extrapolated
in t over the stencils t0 and 2 t0.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

from . import fem
from .functionals import ShapeMetrics, evaluate
from .geometry import StarDomain, boundary_metrics
from .modecoeffs import (Functional, Verdict, classify, kohler_jobin_q, second_derivs,
                         second_variation_mode, threshold_qprime, threshold_qstar)

THRESHOLD_GUARD = 1e-3
PATH_QUANTITIES = ("F", "F_q", "G", "G_q", "V", "P", "T", "Lam")


class NoisyPathError(RuntimeError):
    def __init__(self, msg: str, required_ell: float):
        super().__init__(msg)
        self.required_ell = required_ell


@dataclass(frozen=True)
class PathConfig:
    t0: float = 0.02
    ell: float = 0.02
    phase: str = "cos"
    threads: int = 1


@dataclass(frozen=True)
class _PointMetrics:
    P: float
    V: float
    T: float
    T_fine: float
    Lam: float
    Lam_fine: float


def path_domain(k: int, t: float, phase: str = "cos") -> StarDomain:
    amp = t / math.sqrt(math.pi)
    if amp == 0.0:
        return StarDomain(())
    return StarDomain(((k, amp, 0.0),) if phase == "cos" else ((k, 0.0, amp),))


@lru_cache(maxsize=512)
def _point(k: int, t: float, phase: str, ell: float, with_pde: bool = True) -> _PointMetrics:
    dom = path_domain(k, t, phase)
    bm = boundary_metrics(dom)
    if not with_pde:
        return _PointMetrics(bm.P, bm.V, math.nan, math.nan, math.nan, math.nan)
    msh = fem.mesh(dom, ell)
    tors = fem.solve_torsion(msh)
    eig = fem.solve_eigen(msh)
    return _PointMetrics(bm.P, bm.V, tors.value, tors.fine, eig.value, eig.fine)


def _quantity(name: str, q: float, pm: _PointMetrics, fine: bool = False) -> float:
    if name == "V":
        return pm.V
    if name == "P":
        return pm.P
    T, L = (pm.T_fine, pm.Lam_fine) if fine else (pm.T, pm.Lam)
    if name == "T":
        return T
    if name == "Lam":
        return L
    return evaluate(name, ShapeMetrics(T=T, Lam=L, P=pm.P, V=pm.V), q).value


@dataclass(frozen=True)
class PerturbationPath:
    functional: str
    q: float
    k: int
    phase: str
    t0: float
    ell: float
    ts: tuple[float, ...]
    values: tuple[float, ...]
    # same path with the unextrapolated fine-level fem values
    fine_values: tuple[float, ...] = field(repr=False, default=())

    @property
    def odd_part(self) -> float:
        """|g(t0) - g(-t0)| / t0^2; vanishes at a critical shape."""
        return abs(self.values[3] - self.values[1]) / self.t0**2

    @property
    def first_derivative(self) -> float:
        return (self.values[3] - self.values[1]) / (2 * self.t0)


def path(functional: str, q: float, k: int, t0: float = 0.02, ell: float = 0.02,
         phase: str = "cos", threads: int = 1) -> PerturbationPath:
    """g(t) for t in {-2t0, -t0, 0, t0, 2t0} along the normalised k-th harmonic."""
    if functional not in PATH_QUANTITIES:
        raise ValueError(f"unknown functional {functional!r}")
    if k < 2:
        raise ValueError("modes k = 0, 1 are excluded by the volume and barycenter constraints")
    if not 0.0 < 5 * t0 < 0.5:
        raise ValueError(f"need 0 < 5 t0 < 1/2, got t0={t0}")
    if functional in ("F", "G"):
        q = 1.0
    ts = tuple(j * t0 for j in (-2, -1, 0, 1, 2))
    pde = functional not in ("V", "P")
    args = [(k, t, phase, ell, pde) for t in ts]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            pts = list(ex.map(lambda a: _point(*a), args))
    else:
        pts = [_point(*a) for a in args]
    values = tuple(_quantity(functional, q, p) for p in pts)
    fine = tuple(_quantity(functional, q, p, fine=True) for p in pts) if pde else values
    return PerturbationPath(functional, q, k, phase, t0, ell, ts, values, fine)


def analytic_value(functional: str, q: float, k: int, m: int = 2) -> float:
    if functional == "V":
        return second_derivs(m, k).vol2
    if functional == "P":
        return second_derivs(m, k).p2
    if functional == "T":
        return second_derivs(m, k).tau2
    if functional == "Lam":
        return second_derivs(m, k).lam2
    if functional == "F":
        return second_variation_mode(Functional.F_q, m, 1.0, k)
    return second_variation_mode(Functional(functional), m, q, k)


def _second_difference(v: Sequence[float], t0: float) -> tuple[float, float, float]:
    d1 = (v[3] + v[1] - 2 * v[2]) / t0**2
    d2 = (v[4] + v[0] - 2 * v[2]) / (2 * t0) ** 2
    return d1, d2, (4 * d1 - d2) / 3.0


@dataclass(frozen=True)
class PerturbationReport:
    functional: str
    q: float
    k: int
    fd: float
    fd_t0: float
    fd_2t0: float
    analytic: float
    noise: float
    ell: float

    @property
    def rel_err(self) -> float:
        return abs(self.fd - self.analytic) / abs(self.analytic)

    @property
    def sign_match(self) -> bool:
        return math.copysign(1.0, self.fd) == math.copysign(1.0, self.analytic)

    @property
    def resolved(self) -> bool:
        """Analytic value clears three times the noise floor."""
        return abs(self.analytic) > 3.0 * self.noise


def fd_second(p: PerturbationPath, strict: bool = False) -> PerturbationReport:
    """Richardson second difference compared with the mode formula.

    The noise floor adds the t-truncation estimate |D(t0) - D(2t0)|/3 to the
    shift of the fd value between fine-level and extrapolated fem data.  With
    ``strict`` a noise floor above the predicted signal raises NoisyPathError.
    """
    d1, d2, fd = _second_difference(p.values, p.t0)
    _, _, fd_fine = _second_difference(p.fine_values, p.t0)
    noise = abs(d1 - d2) / 3.0 + abs(fd_fine - fd)
    analytic = analytic_value(p.functional, p.q, p.k)
    if strict and noise >= abs(analytic):
        # fem noise is O(l^2): shrink l until it drops a factor 3 below the signal
        need = p.ell * math.sqrt(abs(analytic) / (3.0 * max(noise, 1e-300)))
        raise NoisyPathError(
            f"noise floor {noise:.3g} exceeds the predicted signal {abs(analytic):.3g}; "
            f"use ell <= {need:.3g}", need)
    return PerturbationReport(p.functional, p.q, p.k, fd, d1, d2, analytic, noise, p.ell)


def cross_validate(functional: str, q: float, k: int, config: PathConfig = PathConfig(),
                   strict: bool = False) -> PerturbationReport:
    p = path(functional, q, k, config.t0, config.ell, config.phase, config.threads)
    return fd_second(p, strict=strict)


# -- sweeps ---------------------------------------------------------------------


@dataclass
class SweepResult:
    functional: str
    m: int
    rows: list[PerturbationReport]
    verdicts: dict[float, tuple[Verdict, Verdict]]

    @property
    def agrees(self) -> bool:
        return all(num == ana for num, ana in self.verdicts.values())

    def write_csv(self, path_or_file) -> None:
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh)
            w.writerow(["functional", "q", "k", "fd", "analytic", "rel_err", "sign_match"])
            for r in self.rows:
                w.writerow([r.functional, r.q, r.k, r.fd, r.analytic, r.rel_err, r.sign_match])
        finally:
            if own:
                fh.close()


def _sign_verdict(signs: Iterable[float]) -> Verdict:
    signs = list(signs)
    if all(s > 0 for s in signs):
        return Verdict.STRICT_LOCAL_MIN
    if all(s < 0 for s in signs):
        return Verdict.STRICT_LOCAL_MAX
    return Verdict.SADDLE


def guard_thresholds(functional: str, q: float, m: int = 2) -> None:
    if functional == "G":
        return
    bad = [kohler_jobin_q(m), threshold_qstar(m) if functional == "F_q" else threshold_qprime(m)]
    for b in bad:
        if abs(q - b) < THRESHOLD_GUARD:
            raise ValueError(f"q={q} lies within {THRESHOLD_GUARD} of the threshold {b:.6f}")


def theorem_sweep(functional: str, qs: Sequence[float] = (1.0,), ks: Sequence[int] = (2, 3, 4, 5, 6),
                  m: int = 2, config: PathConfig = PathConfig(), add_witnesses: bool = True) -> SweepResult:
    """Signs of the fd second derivative per (q, k) and the verdict they imply.

    With ``add_witnesses`` the first negative mode reported by classify() and the
    mode after it are appended to the k-grid so a saddle is seen numerically.
    """
    if m != 2:
        raise ValueError("fem sweeps are two-dimensional")
    if functional == "G":
        qs = (1.0,)
    rows: list[PerturbationReport] = []
    verdicts = {}
    for q in qs:
        guard_thresholds(functional, q, m)
        cls = classify(functional, m, q)
        grid = list(ks)
        if add_witnesses and cls.witness_modes:
            for k in (cls.witness_modes[1], cls.witness_modes[1] + 1):
                if k not in grid:
                    grid.append(k)
        reps = [cross_validate(functional, q, k, config) for k in sorted(grid)]
        rows.extend(reps)
        verdicts[q] = (_sign_verdict(r.fd for r in reps), cls.verdict)
    return SweepResult(functional, m, rows, verdicts)
