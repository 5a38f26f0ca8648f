"""Scale-invariant shape functionals built from torsion, eigenvalue, perimeter and volume.

    F   = T Lam / V
    F_q = T^q Lam / V^alpha_q,      alpha_q = ((m+2) q - 2) / m
    G   = T Lam / P^(m/(m-1))
    G_q = T^q Lam / P^beta_q,       beta_q  = ((m+2) q - 2) / (m-1)
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .modecoeffs import alpha_q, ball_constants, beta_q

IDENTITY_RTOL = 1e-12
SAFETY = 3.0


class Provenance:
    EXACT = "exact"
    FORMULA = "formula"
    FD = "fd"

    @staticmethod
    def fem(ell: float) -> str:
        return f"fem({ell:g})"


@dataclass(frozen=True)
class ShapeMetrics:
    """T, Lam, P, V of one domain.

    ``tol_T`` and ``tol_Lam`` are relative uncertainties; for fem records they
    are three times the Richardson-minus-fine gap.
    """

    T: float
    Lam: float
    P: float
    V: float
    m: int = 2
    provenance: str = Provenance.EXACT
    tol_T: float = 0.0
    tol_Lam: float = 0.0
    convex: bool | None = None
    label: str = ""

    def __post_init__(self):
        for name in ("T", "Lam", "P", "V"):
            val = getattr(self, name)
            if not (val > 0.0 and math.isfinite(val)):
                raise ValueError(f"{name} must be positive and finite, got {val}")

    def scaled(self, t: float, exponents: Sequence[float] | None = None) -> "ShapeMetrics":
        """Metrics of t * Omega; ``exponents`` overrides the powers of (T, Lam, P, V)."""
        m = self.m
        eT, eL, eP, eV = exponents if exponents is not None else (m + 2, -2, m - 1, m)
        return replace(self, T=self.T * t**eT, Lam=self.Lam * t**eL, P=self.P * t**eP, V=self.V * t**eV)

    def isoperimetric_ratio(self) -> float:
        return self.V * self.P ** (-self.m / (self.m - 1))

    def as_dict(self) -> dict:
        return {"T": self.T, "Lam": self.Lam, "P": self.P, "V": self.V, "m": self.m,
                "provenance": self.provenance, "tol_T": self.tol_T, "tol_Lam": self.tol_Lam}


class Name(str, enum.Enum):
    F = "F"
    F_q = "F_q"
    G = "G"
    G_q = "G_q"


@dataclass(frozen=True)
class FunctionalValue:
    name: Name
    q: float
    value: float
    metrics: ShapeMetrics = field(repr=False)
    rel_tol: float = 0.0


def _exponents(name: Name, q: float, m: int) -> tuple[float, float, float, float]:
    """Powers of (T, Lam, P, V) in the functional."""
    if name is Name.F:
        return 1.0, 1.0, 0.0, -1.0
    if name is Name.G:
        return 1.0, 1.0, -m / (m - 1), 0.0
    if name is Name.F_q:
        return q, 1.0, 0.0, -alpha_q(m, q)
    return q, 1.0, -beta_q(m, q), 0.0


def evaluate(name: Name | str, metrics: ShapeMetrics, q: float = 1.0) -> FunctionalValue:
    name = Name(name)
    if name in (Name.F, Name.G):
        q = 1.0
    if q <= 0.0:
        raise ValueError(f"q must be positive, got {q}")
    eT, eL, eP, eV = _exponents(name, q, metrics.m)
    value = metrics.T**eT * metrics.Lam**eL * metrics.P**eP * metrics.V**eV
    tol = abs(eT) * metrics.tol_T + abs(eL) * metrics.tol_Lam
    return FunctionalValue(name, q, value, metrics, tol)


def ball_value(name: Name | str, m: int = 2, q: float = 1.0) -> float:
    b = ball_constants(m)
    return evaluate(name, ShapeMetrics(T=b.T, Lam=b.Lam, P=b.P, V=b.V, m=m), q).value


def sup_G(m: int = 2) -> float:
    """V(B)/P(B)^(m/(m-1)): the supremum of G over open sets."""
    b = ball_constants(m)
    return b.V / b.P ** (m / (m - 1))


def scaling_check(metrics: ShapeMetrics, t: float, exponents: Sequence[float] | None = None,
                  qs: Iterable[float] = (0.3, 0.5, 0.8, 1.0, 1.5)) -> bool:
    if not 1e-3 <= t <= 1e3:
        raise ValueError(f"scale factor must lie in [1e-3, 1e3], got {t}")
    scaled = metrics.scaled(t, exponents)
    for name in Name:
        for q in (qs if name in (Name.F_q, Name.G_q) else (1.0,)):
            a, b = evaluate(name, metrics, q).value, evaluate(name, scaled, q).value
            if abs(a - b) > IDENTITY_RTOL * abs(a):
                return False
    return True


def identity_residuals(metrics: ShapeMetrics, q: float = 0.7) -> dict[str, float]:
    """Relative residuals of the algebraic identities among the functionals."""
    m = metrics.m
    L, P, V = metrics.Lam, metrics.P, metrics.V
    F = evaluate(Name.F, metrics).value
    G = evaluate(Name.G, metrics).value
    kj = 2.0 / (m + 2)

    def rel(a, b):
        return abs(a - b) / abs(b)

    out = {
        "G=F*V*P^(-m/(m-1))": rel(F * V * P ** (-m / (m - 1)), G),
        "F_1=F": rel(evaluate(Name.F_q, metrics, 1.0).value, F),
        "G_1=G": rel(evaluate(Name.G_q, metrics, 1.0).value, G),
        "F_kj=G_kj": rel(evaluate(Name.F_q, metrics, kj).value, evaluate(Name.G_q, metrics, kj).value),
    }
    if m == 2:
        three = F**q * (L * V * V / (P * P)) ** (1 - q) * (P * P / V) ** (2 - 3 * q)
        out["G_q three-factor"] = rel(three, evaluate(Name.G_q, metrics, q).value)
    return out


# -- inequality suite ---------------------------------------------------------


@dataclass(frozen=True)
class InequalityCheck:
    label: str
    check: str
    value: float
    lower: float | None
    upper: float | None
    tol: float
    passed: bool

    @property
    def margin(self) -> float:
        """Signed distance to the nearest bound, relative to the value; negative means violated."""
        gaps = []
        if self.lower is not None:
            gaps.append((self.value - self.lower) / abs(self.value))
        if self.upper is not None:
            gaps.append((self.upper - self.value) / abs(self.value))
        return min(gaps)


@dataclass
class InequalityReport:
    checks: list[InequalityCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[InequalityCheck]:
        return [c for c in self.checks if not c.passed]

    def for_label(self, label: str) -> list[InequalityCheck]:
        return [c for c in self.checks if c.label == label]


def _check(label, name, value, tol, lower=None, upper=None) -> InequalityCheck:
    slack = tol * abs(value)
    ok = True
    if lower is not None:
        ok &= value > lower - slack
    if upper is not None:
        ok &= value < upper + slack
    return InequalityCheck(label, name, value, lower, upper, tol, bool(ok))


def inequality_suite(metrics_list: Sequence[ShapeMetrics]) -> InequalityReport:
    report = InequalityReport()
    for i, mt in enumerate(metrics_list):
        m = mt.m
        b = ball_constants(m)
        label = mt.label or f"domain{i}"
        base = IDENTITY_RTOL
        kj = 2.0 / (m + 2)
        # Kohler-Jobin: T^(2/(m+2)) Lam minimal on balls
        tol = base + kj * mt.tol_T + mt.tol_Lam
        report.checks.append(_check(label, "kohler_jobin", mt.T**kj * mt.Lam, tol,
                                    lower=b.T**kj * b.Lam))
        # perimeter forms of Saint-Venant and Faber-Krahn, and the isoperimetric inequality
        sv = mt.T / mt.P ** ((m + 2) / (m - 1))
        report.checks.append(_check(label, "saint_venant_perimeter", sv, base + mt.tol_T,
                                    upper=b.T / b.P ** ((m + 2) / (m - 1))))
        fk = mt.Lam * mt.P ** (2.0 / (m - 1))
        report.checks.append(_check(label, "faber_krahn_perimeter", fk, base + mt.tol_Lam,
                                    lower=b.Lam * b.P ** (2.0 / (m - 1))))
        report.checks.append(_check(label, "isoperimetric", mt.isoperimetric_ratio(), base,
                                    upper=sup_G(m)))
        G = evaluate(Name.G, mt)
        report.checks.append(_check(label, "G_below_sup", G.value, base + G.rel_tol, upper=sup_G(m)))
        if mt.convex:
            F = evaluate(Name.F, mt)
            report.checks.append(_check(label, "polya_F", F.value, base + F.rel_tol,
                                        lower=math.pi**2 / (4 * m * (m + 2)), upper=1.0))
            eig = mt.Lam * mt.V**2 / mt.P**2
            report.checks.append(_check(label, "polya_eigen", eig, base + mt.tol_Lam,
                                        lower=math.pi**2 / (4 * m * m), upper=math.pi**2 / 4))
    return report


# -- metrics from solvers ---------------------------------------------------------


def metrics_from_fem(domain, ell: float = 0.03, label: str = "", method: str = "direct") -> ShapeMetrics:
    from . import fem
    from .geometry import PolygonDomain, StarDomain, boundary_metrics

    msh = fem.mesh(domain, ell)
    tors = fem.solve_torsion(msh, method=method)
    eig = fem.solve_eigen(msh, method=method)
    bm = boundary_metrics(domain)
    if isinstance(domain, PolygonDomain):
        convex = domain.convex
    elif isinstance(domain, StarDomain):
        convex = domain.is_convex()
    else:
        convex = None
    return ShapeMetrics(
        T=tors.value, Lam=eig.value, P=bm.P, V=bm.V, m=2, provenance=Provenance.fem(ell),
        tol_T=SAFETY * tors.estimate / tors.value, tol_Lam=SAFETY * eig.estimate / eig.value,
        convex=convex, label=label,
    )
