import math

import pytest

from polya_lab.functionals import ball_value
from polya_lab.modecoeffs import Verdict
from polya_lab.perturbation import (NoisyPathError, PathConfig, analytic_value, cross_validate,
                                    fd_second, path, theorem_sweep)

J0SQ = 2.404825557695773**2
FAST = PathConfig(t0=0.02, ell=0.05)


def test_g_path_center_value():
    p = path("G", 1.0, 2, t0=0.02, ell=0.03)
    assert p.values[2] == pytest.approx(J0SQ / (32 * math.pi), rel=1e-6)


def test_even_mode_odd_part_vanishes():
    p = path("G", 1.0, 2, ell=0.05)
    assert p.odd_part < 1e-6


def test_odd_mode_criticality():
    p = path("F_q", 0.8, 3, ell=0.05)
    assert abs(p.first_derivative) < 1e-6


def test_volume_path_exact():
    r = fd_second(path("V", 1.0, 5))
    assert r.fd == pytest.approx(1.0, abs=1e-8)
    r = fd_second(path("P", 1.0, 4))
    assert r.fd == pytest.approx(16.0, rel=1e-5)


def test_path_validation():
    with pytest.raises(ValueError):
        path("F", 1.0, 1)
    with pytest.raises(ValueError):
        path("G", 1.0, 2, t0=0.2)
    with pytest.raises(ValueError):
        path("H", 1.0, 2)


@pytest.mark.parametrize("functional,q,k,sign", [("G", 1.0, 2, -1), ("F_q", 0.8, 2, 1), ("F_q", 0.8, 8, -1)])
def test_fd_signs(functional, q, k, sign):
    r = cross_validate(functional, q, k, FAST)
    assert r.sign_match and math.copysign(1, r.fd) == sign
    assert r.rel_err < 0.05


def test_component_second_derivatives():
    # T'' and Lambda'' per mode from the Hadamard formulas
    for name in ("T", "Lam"):
        r = cross_validate(name, 1.0, 3, FAST)
        assert r.rel_err < 1e-3


def test_quadratic_scaling_t0_stable():
    a = cross_validate("G", 1.0, 3, PathConfig(t0=0.02, ell=0.05))
    b = cross_validate("G", 1.0, 3, PathConfig(t0=0.01, ell=0.05))
    assert abs(a.fd_t0 - b.fd_t0) / abs(b.fd_t0) < 0.02


def test_noisy_path_error():
    # near q* the k = 2 coefficient nearly vanishes and cannot be resolved on a coarse mesh
    p = path("F_q", 0.9455, 2, ell=0.2)
    with pytest.raises(NoisyPathError) as info:
        fd_second(p, strict=True)
    assert 0 < info.value.required_ell < 0.2


def test_sweep_g():
    res = theorem_sweep("G", ks=(2, 3, 4), config=FAST)
    assert res.agrees
    assert res.verdicts[1.0] == (Verdict.STRICT_LOCAL_MAX, Verdict.STRICT_LOCAL_MAX)
    assert all(r.fd < 0 for r in res.rows)


def test_sweep_csv(tmp_path):
    res = theorem_sweep("F_q", qs=(0.3,), ks=(2, 3), config=FAST)
    out = tmp_path / "sweep.csv"
    res.write_csv(out)
    lines = out.read_text().splitlines()
    assert lines[0] == "functional,q,k,fd,analytic,rel_err,sign_match"
    assert len(lines) == 3


def test_sweep_threshold_guard():
    with pytest.raises(ValueError):
        theorem_sweep("F_q", qs=(0.5004,), ks=(2,), config=FAST)


def test_analytic_sign_convention():
    assert analytic_value("G", 1.0, 2) < 0
    assert analytic_value("F", 1.0, 2) == pytest.approx(analytic_value("F_q", 1.0, 2))
    assert ball_value("G") == pytest.approx(J0SQ / (32 * math.pi))
