"""Bessel functions of the first kind, their first zeros, and the ratio sequence c_k.

The sequence

    c_k = j * J_{k+m/2}(j) / J_{k-1+m/2}(j),   j = j_{m/2-1},

drives every eigenvalue coefficient of the second shape derivative at the ball.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

SERIES_MAX_X = 8.0
MAX_X = 100.0
K_MAX = 64


class BesselDomainError(ValueError):
    pass


class BesselOverflowError(ArithmeticError):
    pass


@dataclass(frozen=True)
class BesselZero:
    order: float
    value: float
    residual: float


@dataclass(frozen=True)
class CkValue:
    m: int
    k: int
    value: float


def _series(nu: float, x: float) -> float:
    # ascending series; term recursion avoids evaluating large factorials
    if x == 0.0:
        return 1.0 if nu == 0 else 0.0
    half = 0.5 * x
    term = math.exp(nu * math.log(half) - math.lgamma(nu + 1.0))
    total = term
    q = -half * half
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + nu))
        total += term
        if abs(term) < 1e-17 * max(abs(total), 1e-300) and k > half:
            break
        if k > 500:
            break
    return total


def _miller(nu: float, x: float) -> float:
    """Backward recurrence normalised by the Neumann sum for (x/2)^nu0."""
    nu0 = nu - math.floor(nu)
    n_target = int(round(nu - nu0))
    top = int(max(x, nu) + 30 + 6 * math.sqrt(max(x, nu))) | 1
    # j_hi = J_{nu0+top+1}, j_lo = J_{nu0+top}, unnormalised
    j_hi, j_lo = 0.0, 1e-200
    target = 0.0
    norm = 0.0

    def weight(k: int) -> float:
        if k == 0:
            return math.gamma(nu0 + 1.0)
        return (nu0 + 2 * k) * math.exp(math.lgamma(nu0 + k) - math.lgamma(k + 1.0))

    for n in range(top, -1, -1):
        # j_lo currently holds J_{nu0+n}
        if n == n_target:
            target = j_lo
        if n % 2 == 0:
            norm += weight(n // 2) * j_lo
        if n == 0:
            break
        j_new = 2.0 * (nu0 + n) / x * j_lo - j_hi
        j_hi, j_lo = j_lo, j_new
        if abs(j_lo) > 1e200:
            j_hi *= 1e-200
            j_lo *= 1e-200
            target *= 1e-200
            norm *= 1e-200
    return target * (0.5 * x) ** nu0 / norm


def bessel_j(nu: float, x: float) -> float:
    """J_nu(x) for nu >= -1 and 0 <= x <= 100, absolute error below 1e-12."""
    if nu < -1.0 or x < 0.0:
        raise BesselDomainError(f"bessel_j needs nu >= -1 and x >= 0, got nu={nu}, x={x}")
    if x > MAX_X:
        raise BesselDomainError(f"bessel_j is calibrated for x <= {MAX_X}, got {x}")
    if nu < 0.0:
        if nu == -1.0:
            return -bessel_j(1.0, x)
        if x == 0.0:
            raise BesselDomainError(f"J_{nu} is singular at x = 0")
        # one downward step from the non-negative orders
        return 2.0 * (nu + 1.0) / x * bessel_j(nu + 1.0, x) - bessel_j(nu + 2.0, x)
    if x <= SERIES_MAX_X:
        return _series(nu, x)
    return _miller(nu, x)


@lru_cache(maxsize=None)
def first_zero(nu: float) -> BesselZero:
    """First positive zero of J_nu, bracketed by a coarse scan then bisected."""
    if nu < 0.0:
        raise BesselDomainError(f"first_zero needs nu >= 0, got {nu}")
    # J_nu > 0 on (0, j_nu) and j_nu > nu
    lo = max(nu, 1e-3)
    step = 0.25
    hi = lo + step
    while bessel_j(nu, hi) > 0.0:
        lo, hi = hi, hi + step
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if bessel_j(nu, mid) > 0.0:
            lo = mid
        else:
            hi = mid
    # pick the endpoint with the smaller residual
    root = lo if abs(bessel_j(nu, lo)) <= abs(bessel_j(nu, hi)) else hi
    return BesselZero(order=nu, value=root, residual=abs(bessel_j(nu, root)))


def bessel_order(m: int) -> float:
    return m / 2.0 - 1.0


def ball_zero(m: int) -> float:
    """j_{m/2-1}; its square is the first Dirichlet eigenvalue of the unit ball."""
    return first_zero(bessel_order(m)).value


@lru_cache(maxsize=None)
def _ck_table(m: int) -> tuple[float, ...]:
    if m < 2:
        raise ValueError(f"dimension must be >= 2, got {m}")
    j = ball_zero(m)
    j2 = j * j
    # Upward: c_1 = m from J_{m/2-1}(j) = 0, then c_k = (m + 2k - 2) - j^2 / c_{k-1}.
    # Stable only while the order stays below the argument.
    up = [math.inf, float(m)]
    for k in range(2, K_MAX + 1):
        up.append((m + 2 * k - 2) - j2 / up[-1])
    # Downward continued fraction (Miller): c_{k-1} = j^2 / ((m + 2k - 2) - c_k).
    top = K_MAX + 80
    c = j2 / (m + 2 * top)
    down = [0.0] * (K_MAX + 1)
    for k in range(top, 0, -1):
        if k <= K_MAX:
            down[k] = c
        if k > 1:
            c = j2 / ((m + 2 * k - 2) - c)
    down[0] = math.inf
    turn = max(2, int(j - m / 2.0))
    table = up[: turn + 1] + down[turn + 1 :]
    # overflow guard: log|J_{k-1+m/2}(j)| relative to J_{m/2}(j)
    log_j = 0.0
    for k in range(2, K_MAX + 1):
        log_j += math.log(table[k - 1] / j)
        if log_j < -700.0:
            raise BesselOverflowError(f"J_(k-1+m/2) underflows at k={k} for m={m}")
    return tuple(table)


def c_k(m: int, k: int) -> CkValue:
    """c_k for dimension m and mode k (c_0 is +inf since J_{m/2-1}(j) = 0)."""
    if not 0 <= k <= K_MAX:
        raise ValueError(f"mode k must lie in [0, {K_MAX}], got {k}")
    return CkValue(m=m, k=k, value=_ck_table(m)[k])


def ck_value(m: int, k: int) -> float:
    return _ck_table(m)[k]
