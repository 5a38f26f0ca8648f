"""Per-mode second shape derivatives at the unit ball and the quadratic forms they assemble.

All quadratic forms are diagonal in the spherical-harmonic basis: for an
L2-orthonormal expansion phi = sum phi_{k,l} Y^{k,l} the second derivative of a
functional A along the normal path x + t*phi(x)*x is sum_k a_k sum_l phi_{k,l}^2.
Modes k = 0, 1 correspond to dilations and translations and are excluded.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .specfun import K_MAX, ball_zero, ck_value

K_SCAN = K_MAX
DEGENERATE_TOL = 1e-10


@dataclass(frozen=True)
class BallConstants:
    m: int
    omega: float
    P: float
    V: float
    T: float
    Lam: float


def unit_ball_volume(m: int) -> float:
    return math.pi ** (m / 2.0) / math.gamma(m / 2.0 + 1.0)


def ball_constants(m: int) -> BallConstants:
    if not 2 <= m <= 10:
        raise ValueError(f"dimension must lie in [2, 10], got {m}")
    omega = unit_ball_volume(m)
    j = ball_zero(m)
    return BallConstants(m=m, omega=omega, P=m * omega, V=omega,
                         T=omega / (m * (m + 2)), Lam=j * j)


@dataclass(frozen=True)
class ModeCoefficients:
    m: int
    k: int
    vol2: float
    p2: float
    tau2: float
    lam2: float
    G: float | None = None
    F_q: float | None = None
    G_q: float | None = None
    q: float | None = None


def second_derivs(m: int, k: int) -> ModeCoefficients:
    """Mode-k weights of vol'', p'', tau'', lambda'' at B_1 (k >= 1 for lambda'')."""
    if m < 2 or k < 0:
        raise ValueError(f"need m >= 2 and k >= 0, got m={m}, k={k}")
    b = ball_constants(m)
    vol2 = float(m - 1)
    p2 = float(k * k + (m - 2) * k + (m - 1) * (m - 2))
    tau2 = -(2.0 * k - (m + 1)) / m**2
    if k == 0:
        # the constant mode carries 3*beta_m on the eigenvalue
        lam2 = 3.0 * (2.0 * b.Lam / b.P)
    else:
        lam2 = (2.0 * b.Lam / b.P) * (2 * k + (m - 1) - 2 * ck_value(m, k))
    return ModeCoefficients(m=m, k=k, vol2=vol2, p2=p2, tau2=tau2, lam2=lam2)


def alpha_q(m: int, q: float) -> float:
    return ((m + 2) * q - 2.0) / m


def beta_q(m: int, q: float) -> float:
    return ((m + 2) * q - 2.0) / (m - 1)


def _check_mode(k: int) -> None:
    if k < 2:
        raise ValueError(f"modes k = 0, 1 are dilations/translations; need k >= 2, got {k}")


def g_bracket(m: int, k: int) -> float:
    return m * k * k + (3 * m * m - 4 * m) * k - 7 * m * m + 7 * m + 4 * ck_value(m, k) * (m - 1)


def g_prefactor(m: int) -> float:
    b = ball_constants(m)
    return b.Lam / (b.P ** (m / (m - 1)) * m**2 * (m + 2) * (m - 1))


def g_mode(m: int, k: int) -> float:
    """G_k; the second variation of G is -sum_k G_k phi_k^2."""
    _check_mode(k)
    return g_prefactor(m) * g_bracket(m, k)


def fq_bracket(m: int, q: float, k: int) -> float:
    Q = q * (m + 2)
    return k * (2.0 - Q) + Q + 2 * m - 2 - 2 * ck_value(m, k)


def fq_prefactor(m: int, q: float) -> float:
    b = ball_constants(m)
    return 2.0 * b.T ** (q - 1.0) * b.Lam / (m**2 * (m + 2) * b.V ** alpha_q(m, q))


def fq_mode(m: int, q: float, k: int) -> float:
    """F_k^q; the second variation of F_q is +sum_k F_k^q phi_k^2."""
    _check_mode(k)
    if q <= 0:
        raise ValueError(f"q must be positive, got {q}")
    return fq_prefactor(m, q) * fq_bracket(m, q, k)


def gq_bracket(m: int, q: float, k: int) -> float:
    s = 2.0 - q * (m + 2)
    return s * k * k + (3 * m - 4) * s * k + (m - 1) * (3 * q * (m + 2) + 4 * m - 6 - 4 * ck_value(m, k))


def gq_prefactor(m: int, q: float) -> float:
    b = ball_constants(m)
    return b.T ** (q - 1.0) * b.Lam / (b.P ** beta_q(m, q) * m**2 * (m + 2) * (m - 1))


def gq_mode(m: int, q: float, k: int) -> float:
    """G_k^q; the second variation of G_q is +sum_k G_k^q phi_k^2."""
    _check_mode(k)
    if q <= 0:
        raise ValueError(f"q must be positive, got {q}")
    return gq_prefactor(m, q) * gq_bracket(m, q, k)


def mode_coefficients(m: int, k: int, q: float) -> ModeCoefficients:
    base = second_derivs(m, k)
    return ModeCoefficients(
        m=m, k=k, vol2=base.vol2, p2=base.p2, tau2=base.tau2, lam2=base.lam2,
        G=g_mode(m, k), F_q=fq_mode(m, q, k), G_q=gq_mode(m, q, k), q=q,
    )


def kohler_jobin_q(m: int) -> float:
    return 2.0 / (m + 2)


def qstar_closed_form(m: int) -> float:
    j = ball_zero(m)
    return 2.0 / (m + 2) * (j * j / m - 1.0)


def threshold_qstar(m: int) -> float:
    """Root in q of the k = 2 bracket of F_q (agrees with the closed form)."""
    return brentq(lambda q: fq_bracket(m, q, 2), 1e-6, 10.0, xtol=1e-15, rtol=1e-15)


def threshold_qprime(m: int) -> float:
    """Root in q of the k = 2 bracket of G_q."""
    return brentq(lambda q: gq_bracket(m, q, 2), 1e-6, 10.0, xtol=1e-15, rtol=1e-15)


def qprime_closed_form(m: int) -> float:
    j = ball_zero(m)
    return (2.0 * (3 - m) + 4.0 * (m - 1) * j * j / m) / ((m + 2) * (3 * m - 1))


class Functional(str, enum.Enum):
    F_q = "F_q"
    G_q = "G_q"
    G = "G"


class Verdict(str, enum.Enum):
    STRICT_LOCAL_MIN = "StrictLocalMin"
    STRICT_LOCAL_MAX = "StrictLocalMax"
    SADDLE = "Saddle"
    DEGENERATE = "DegenerateThreshold"


@dataclass(frozen=True)
class QClassification:
    functional: Functional
    m: int
    q: float
    verdict: Verdict
    coercivity_order: float
    witness_modes: tuple[int, int] | None = None


def second_variation_mode(functional: Functional | str, m: int, q: float, k: int) -> float:
    """Coefficient of phi_k^2 in l2[A](phi, phi) with the sign of the functional."""
    functional = Functional(functional)
    if functional is Functional.G:
        return -g_mode(m, k)
    if functional is Functional.F_q:
        return fq_mode(m, q, k)
    return gq_mode(m, q, k)


def _bracket(functional: Functional, m: int, q: float, k: int) -> float:
    if functional is Functional.G:
        return -g_bracket(m, k)
    if functional is Functional.F_q:
        return fq_bracket(m, q, k)
    return gq_bracket(m, q, k)


def classify(functional: Functional | str, m: int, q: float = 1.0) -> QClassification:
    functional = Functional(functional)
    if functional is Functional.G:
        q = 1.0
    if q <= 0:
        raise ValueError(f"q must be positive, got {q}")
    order = 0.5 if functional is Functional.F_q else 1.0
    kj = abs(q - kohler_jobin_q(m)) <= DEGENERATE_TOL and functional is not Functional.G
    if kj:
        # only L2 coercivity survives at the Kohler-Jobin exponent
        return QClassification(functional, m, q, Verdict.DEGENERATE, 0.0)
    values = [_bracket(functional, m, q, k) for k in range(2, K_SCAN + 1)]
    if abs(values[0]) <= DEGENERATE_TOL:
        return QClassification(functional, m, q, Verdict.DEGENERATE, order)
    pos = [k for k, v in zip(range(2, K_SCAN + 1), values) if v > 0]
    neg = [k for k, v in zip(range(2, K_SCAN + 1), values) if v < 0]
    if pos and neg:
        return QClassification(functional, m, q, Verdict.SADDLE, order, (pos[0], neg[0]))
    verdict = Verdict.STRICT_LOCAL_MIN if pos else Verdict.STRICT_LOCAL_MAX
    return QClassification(functional, m, q, verdict, order)
