import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import jv

from polya_lab.specfun import (K_MAX, BesselDomainError, ball_zero, bessel_j, c_k, ck_value,
                               first_zero)

# first zeros from Abramowitz & Stegun, Table 9.5 (and j_{1/2} = pi, j_{3/2} = root of tan x = x)
ZEROS = {
    0.0: 2.404825557695773,
    0.5: math.pi,
    1.0: 3.8317059702075125,
    1.5: 4.493409457909064,
    2.0: 5.135622301840683,
    3.0: 6.380161895923984,
    4.0: 7.588342434503804,
}


@pytest.mark.parametrize("nu,x", [(0, 0.0), (0, 1.0), (1, 2.5), (0.5, 7.9), (2.5, 8.1),
                                  (0, 30.0), (10, 50.0), (40, 20.0), (70, 99.0), (1, 100.0)])
def test_bessel_matches_scipy(nu, x):
    assert bessel_j(nu, x) == pytest.approx(jv(nu, x), abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(nu=st.floats(-1.0, 70.0), x=st.floats(1e-6, 100.0))
def test_bessel_property_vs_scipy(nu, x):
    if nu < 0 and x < 1e-3:
        return
    assert abs(bessel_j(nu, x) - jv(nu, x)) < 1e-12


def test_negative_order_identity():
    assert bessel_j(-1.0, 3.3) == pytest.approx(-bessel_j(1.0, 3.3), abs=1e-15)


@pytest.mark.parametrize("nu,x", [(-1.5, 1.0), (0.0, -1.0), (1.0, 100.5)])
def test_domain_errors(nu, x):
    with pytest.raises(BesselDomainError):
        bessel_j(nu, x)


def test_singular_negative_order_at_zero():
    with pytest.raises(BesselDomainError):
        bessel_j(-0.5, 0.0)


@pytest.mark.parametrize("nu,z", list(ZEROS.items()))
def test_first_zero_table(nu, z):
    zero = first_zero(nu)
    assert zero.value == pytest.approx(z, abs=1e-12)
    assert zero.residual < 1e-14


def test_ball_zero_mapping():
    assert ball_zero(2) == pytest.approx(ZEROS[0.0], abs=1e-13)
    assert ball_zero(3) == pytest.approx(math.pi, abs=1e-13)
    assert ball_zero(4) == pytest.approx(ZEROS[1.0], abs=1e-13)


@pytest.mark.parametrize("m", range(2, 11))
def test_ck_low_modes(m):
    j = ball_zero(m)
    assert ck_value(m, 1) == pytest.approx(m, abs=1e-10)
    assert ck_value(m, 2) == pytest.approx(m + 2 - j * j / m, abs=1e-10)
    assert math.isinf(ck_value(m, 0))


@pytest.mark.parametrize("m", [2, 3, 5, 10])
def test_ck_against_scipy_ratio(m):
    j = ball_zero(m)
    for k in (1, 2, 5, 10, 30, 64):
        ratio = j * jv(k + m / 2, j) / jv(k - 1 + m / 2, j)
        assert ck_value(m, k) == pytest.approx(ratio, rel=1e-11)


@pytest.mark.parametrize("m", range(2, 11))
def test_ck_decreasing_convex(m):
    c = np.array([ck_value(m, k) for k in range(1, K_MAX + 1)])
    assert np.all(np.diff(c) < 0)
    assert np.all(c[2:] - 2 * c[1:-1] + c[:-2] > 0)
    assert c[-1] > 0


def test_ck_record_and_range():
    rec = c_k(2, 3)
    assert (rec.m, rec.k) == (2, 3)
    with pytest.raises(ValueError):
        c_k(2, K_MAX + 1)
    with pytest.raises(ValueError):
        c_k(2, -1)
