import io
import math

import pytest
from hypothesis import given, settings, strategies as st

from polya_lab.fem import ball_exact
from polya_lab.homogenization import (InfeasibleHoleError, best_delta, condenser_capacity, hole_radius,
                                      inner_parallel_volume, perimeter_bound, plan, relaxed_metrics,
                                      sup_curve, write_curve_csv)
from polya_lab.modecoeffs import ball_constants

DISK = ball_exact(2)


def test_hole_radius_m2_example():
    assert hole_radius(2, 1, 2 * math.pi) == pytest.approx(0.5 * math.exp(-1), rel=1e-15)
    assert hole_radius(2, 1, 2 * math.pi) == pytest.approx(0.1839397, abs=1e-7)


@pytest.mark.parametrize("m", [2, 3, 4])
@pytest.mark.parametrize("n", range(1, 9))
def test_capacity_back_substitution(m, n):
    c = 1.0 if m > 2 else 5.0 * n * n
    r = hole_radius(m, n, c)
    assert condenser_capacity(m, r, 1 / (2 * n)) == pytest.approx(c / n**m, rel=1e-10)


def test_hole_radius_decay():
    vals = [n**2 * hole_radius(2, n, 1.0) for n in (1, 2, 4, 8)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-80
    vals3 = [n**3 * hole_radius(3, n, 1.0) ** 2 for n in (1, 4, 16, 64)]
    assert all(b < a for a, b in zip(vals3, vals3[1:]))


def test_hole_radius_errors():
    with pytest.raises(ValueError):
        hole_radius(2, 0, 1.0)
    with pytest.raises(ValueError):
        hole_radius(3, 1, -1.0)
    # for vanishingly thin exponent the m = 2 radius underflows
    with pytest.raises(InfeasibleHoleError):
        hole_radius(2, 40, 1e-3)


def test_relaxed_metrics_examples():
    rel = relaxed_metrics(DISK, 0.0, 0.1)
    assert rel.Lam_mu == pytest.approx(DISK.Lam)
    assert rel.T_mu_lower == pytest.approx(math.pi * 0.9**4 * 0.01, rel=1e-12)
    assert rel.T_mu_lower <= DISK.T
    rel = relaxed_metrics(DISK, 1e3, 0.05)
    assert rel.Lam_mu == pytest.approx(1e3 + DISK.Lam)
    with pytest.raises(ValueError):
        relaxed_metrics(DISK, 1.0, 1.5)
    assert inner_parallel_volume("rectangle", 0.1, width=1, height=2) == pytest.approx(0.8 * 1.8)


def test_perimeter_bound_examples():
    b, margin = perimeter_bound(DISK, 2, 10, 1.0)
    assert b == pytest.approx(2 * math.pi, abs=1e-12) and b >= DISK.P
    ball3 = ball_exact(3)
    b3, _ = perimeter_bound(ball3, 3, 4, 1.0)
    assert math.isfinite(b3) and b3 > ball3.P
    excess = [perimeter_bound(ball3, 3, n, 1.0)[0] - ball3.P for n in (4, 16, 64, 256)]
    assert all(b < a for a, b in zip(excess, excess[1:]))
    pl = plan(DISK, 3, 10.0, 0.1)
    assert pl.r < 1 / 6 and pl.perimeter_bound >= DISK.P and pl.T_mu_lower <= DISK.T


def test_sup_curve_properties():
    target = 1 / (4 * math.pi)
    pts = sup_curve(DISK, [1e2, 1e4, 1e6], [1e-1, 1e-2, 1e-3])
    assert all(p.lower_bound < target for p in pts)
    assert all(p.target == pytest.approx(target) for p in pts)
    for d in (1e-1, 1e-2, 1e-3):
        col = [p.lower_bound for p in pts if p.delta == d]
        assert all(b >= a for a, b in zip(col, col[1:]))


@settings(max_examples=100, deadline=None)
@given(c=st.floats(1.0, 1e12), delta=st.floats(1e-5, 0.5))
def test_curve_below_isoperimetric_ratio(c, delta):
    (pt,) = sup_curve(DISK, [c], [delta])
    assert 0 < pt.lower_bound < pt.target


def test_joint_limit_reaches_target():
    # letting c grow and taking delta at its optimum drives the gap to zero
    gaps = [sup_curve(DISK, [c], [best_delta(c)])[0].gap for c in (1e4, 1e6, 1e8, 1e10)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-2


def test_curve_csv():
    buf = io.StringIO()
    write_curve_csv(sup_curve(DISK, [1e2], [0.1]), buf)
    assert buf.getvalue().splitlines()[0] == "c,delta,lower_bound,target,gap"


def test_ball_inner_volume_m3():
    b = ball_constants(3)
    assert inner_parallel_volume("ball", 0.5, m=3) == pytest.approx(b.omega / 8)
