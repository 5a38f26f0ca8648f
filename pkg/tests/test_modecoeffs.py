import math

import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import jv

from polya_lab.modecoeffs import (Functional, Verdict, ball_constants, classify, fq_bracket, fq_mode,
                                  g_bracket, g_mode, gq_bracket, gq_mode, kohler_jobin_q,
                                  mode_coefficients, qprime_closed_form, qstar_closed_form,
                                  second_derivs, second_variation_mode, threshold_qprime,
                                  threshold_qstar)
from polya_lab.specfun import ball_zero

J0 = 2.404825557695773

# mode values confirmed by fem finite differences along the normalised harmonic (rel. agreement < 1e-4)
FD_CONFIRMED = {
    ("G", 1.0, 2): 0.0589038,
    ("G", 1.0, 3): 0.175144,
    ("G", 1.0, 4): 0.333584,
    ("F_q", 0.3, 2): 5.67873,
    ("F_q", 0.8, 3): 0.0154049,
    ("F_q", 0.8, 8): -2.21586,
    ("G_q", 0.6, 3): 0.0176956,
    ("G_q", 0.9, 8): -2.44289,
}


def _ck_scipy(m, k):
    j = ball_zero(m)
    return j * jv(k + m / 2, j) / jv(k - 1 + m / 2, j)


def test_ball_constants_m2():
    b = ball_constants(2)
    assert (b.P, b.V, b.T) == pytest.approx((2 * math.pi, math.pi, math.pi / 8))
    assert b.Lam == pytest.approx(J0**2, rel=1e-14)
    assert ball_constants(3).Lam == pytest.approx(math.pi**2, rel=1e-14)
    with pytest.raises(ValueError):
        ball_constants(11)


@pytest.mark.parametrize("key,value", list(FD_CONFIRMED.items()))
def test_mode_values_fd_confirmed(key, value):
    name, q, k = key
    got = {"G": lambda: g_mode(2, k), "F_q": lambda: fq_mode(2, q, k), "G_q": lambda: gq_mode(2, q, k)}[name]()
    assert got == pytest.approx(value, rel=5e-6)


@pytest.mark.parametrize("m", [2, 3, 6])
@pytest.mark.parametrize("k", [2, 3, 7, 20])
def test_brackets_with_scipy_ck(m, k):
    c = _ck_scipy(m, k)
    q = 0.77
    Q = q * (m + 2)
    assert g_bracket(m, k) == pytest.approx(m * k * k + (3 * m * m - 4 * m) * k - 7 * m * m + 7 * m + 4 * c * (m - 1))
    assert fq_bracket(m, q, k) == pytest.approx(k * (2 - Q) + Q + 2 * m - 2 - 2 * c)
    s = 2 - Q
    assert gq_bracket(m, q, k) == pytest.approx(s * k * k + (3 * m - 4) * s * k + (m - 1) * (3 * Q + 4 * m - 6 - 4 * c))


def test_second_derivs_fd_confirmed():
    # T'' and Lambda'' per mode agree with fem finite differences to ~1e-6 (m = 2)
    d = second_derivs(2, 3)
    assert (d.vol2, d.p2, d.tau2) == (1.0, 9.0, -0.75)
    assert d.lam2 == pytest.approx(10.00524, rel=1e-6)
    assert second_derivs(2, 0).lam2 == pytest.approx(3 * 2 * J0**2 / (2 * math.pi))


def test_specializations():
    # q = 1 turns G_q into G with the opposite overall sign convention
    for k in range(2, 12):
        assert gq_mode(2, 1.0, k) == pytest.approx(-g_mode(2, k), rel=1e-12)
    # at the Kohler-Jobin exponent F_q and G_q coincide
    for m in (2, 3, 5):
        q = kohler_jobin_q(m)
        for k in range(2, 10):
            assert gq_mode(m, q, k) == pytest.approx(fq_mode(m, q, k), rel=1e-12)


def test_thresholds_frozen():
    assert threshold_qstar(2) == pytest.approx(0.9457964907366965, abs=1e-12)
    assert threshold_qstar(3) == pytest.approx(0.4 * (math.pi**2 / 3 - 1), abs=1e-12)
    assert threshold_qprime(2) == pytest.approx((1 + J0**2) / 10, abs=1e-12)
    assert threshold_qprime(3) == pytest.approx(0.6579736267392907, abs=1e-12)


@pytest.mark.parametrize("m", range(2, 11))
def test_thresholds_closed_forms(m):
    assert threshold_qstar(m) == pytest.approx(qstar_closed_form(m), abs=1e-12)
    assert threshold_qprime(m) == pytest.approx(qprime_closed_form(m), abs=1e-12)
    assert kohler_jobin_q(m) < threshold_qprime(m) < threshold_qstar(m) < 1


@pytest.mark.parametrize("q,verdict", [(0.3, Verdict.STRICT_LOCAL_MIN), (0.5, Verdict.DEGENERATE),
                                       (0.6, Verdict.SADDLE), (0.8, Verdict.SADDLE),
                                       (0.95, Verdict.STRICT_LOCAL_MAX), (1.0, Verdict.STRICT_LOCAL_MAX)])
def test_classify_fq(q, verdict):
    assert classify("F_q", 2, q).verdict is verdict


@pytest.mark.parametrize("q,verdict", [(0.3, Verdict.STRICT_LOCAL_MIN), (0.5, Verdict.DEGENERATE),
                                       (0.6, Verdict.SADDLE), (0.7, Verdict.STRICT_LOCAL_MAX),
                                       (0.9, Verdict.STRICT_LOCAL_MAX)])
def test_classify_gq(q, verdict):
    assert classify("G_q", 2, q).verdict is verdict


def test_classify_g_and_orders():
    c = classify(Functional.G, 2)
    assert c.verdict is Verdict.STRICT_LOCAL_MAX and c.coercivity_order == 1.0
    assert classify("F_q", 2, 0.3).coercivity_order == 0.5
    assert classify("F_q", 2, 0.5).coercivity_order == 0.0
    assert classify("F_q", 2, 0.8).witness_modes == (2, 4)
    assert classify("F_q", 2, 0.6).witness_modes == (2, 10)


def test_witness_signs():
    for name, q in (("F_q", 0.6), ("F_q", 0.8), ("G_q", 0.6)):
        kp, kn = classify(name, 2, q).witness_modes
        assert second_variation_mode(name, 2, q, kp) > 0 > second_variation_mode(name, 2, q, kn)


@settings(max_examples=60, deadline=None)
@given(m=st.integers(2, 10), q=st.floats(0.05, 3.0))
def test_classification_consistent_with_modes(m, q):
    if abs(q - kohler_jobin_q(m)) < 1e-6 or abs(q - threshold_qstar(m)) < 1e-6:
        return
    c = classify("F_q", m, q)
    signs = {math.copysign(1, fq_mode(m, q, k)) for k in range(2, 65)}
    expected = {frozenset({1.0}): Verdict.STRICT_LOCAL_MIN, frozenset({-1.0}): Verdict.STRICT_LOCAL_MAX}
    assert c.verdict is expected.get(frozenset(signs), Verdict.SADDLE)


def test_mode_validation():
    with pytest.raises(ValueError):
        g_mode(2, 1)
    with pytest.raises(ValueError):
        fq_mode(2, -0.5, 3)
    mc = mode_coefficients(2, 3, 0.8)
    assert mc.F_q == pytest.approx(fq_mode(2, 0.8, 3))
