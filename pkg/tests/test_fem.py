import csv
import math

import numpy as np
import pytest

from polya_lab import fem
from polya_lab.geometry import PolygonDomain, StarDomain, nearly_spherical, rectangle, thinning_sequence

J0SQ = 2.404825557695773**2


def square_torsion_oracle(a: float = 1.0, b: float = 1.0, terms: int = 50) -> float:
    """Single-series (tanh) form of the rectangle torsional rigidity."""
    n = np.arange(1, 2 * terms, 2, dtype=float)
    s = np.sum(np.tanh(n * math.pi * b / (2 * a)) / n**5)
    return a**3 * b / 12 * (1 - 192 * a / (math.pi**5 * b) * s)


@pytest.fixture(scope="module")
def disk_mesh():
    return fem.mesh(StarDomain(()), 0.05)


def test_disk_triangle_count(disk_mesh):
    expected = math.pi / (0.05**2 * math.sqrt(3) / 4)
    assert expected / 2 < disk_mesh.n_triangles < 2 * expected
    assert disk_mesh.min_angle() >= 20.0
    assert np.all(disk_mesh.areas() > 0)


def test_boundary_nodes_on_boundary():
    d = nearly_spherical(3, 0.1)
    m = fem.mesh(d, 0.05)
    xy = m.nodes[m.boundary]
    r, th = np.hypot(xy[:, 0], xy[:, 1]), np.arctan2(xy[:, 1], xy[:, 0])
    assert np.allclose(r, d.rho(th), atol=1e-12)
    fine = m.refined()
    xy = fine.nodes[fine.boundary]
    r, th = np.hypot(xy[:, 0], xy[:, 1]), np.arctan2(xy[:, 1], xy[:, 0])
    assert np.allclose(r, d.rho(th), atol=1e-12)


def test_square_boundary_nodes():
    m = fem.mesh(rectangle(1, 1), 0.1)
    xy = m.nodes[m.boundary]
    on_edge = (np.isclose(xy[:, 0], 0) | np.isclose(xy[:, 0], 1) | np.isclose(xy[:, 1], 0) | np.isclose(xy[:, 1], 1))
    assert on_edge.all()
    assert m.min_angle() >= 20.0


def test_thin_rectangle_resolved():
    m = fem.mesh(thinning_sequence("rectangle", 50), 0.05)
    assert m.ell <= 0.02 / 4 + 1e-15
    interior_y = np.unique(np.round(m.nodes[~m.boundary][:, 1], 9))
    assert interior_y.size >= 3  # at least four element layers across the width


def test_mesh_errors():
    with pytest.raises(fem.MeshError):
        fem.mesh(StarDomain(()), 0.3)
    with pytest.raises(fem.MeshError):
        fem.mesh(rectangle(1e-5, 1e-5), 0.1)


def test_disk_torsion_and_eigen():
    m = fem.mesh(StarDomain(()), 0.03)
    T = fem.solve_torsion(m)
    L = fem.solve_eigen(m)
    assert T.value == pytest.approx(math.pi / 8, rel=5e-3)
    assert L.value == pytest.approx(J0SQ, rel=5e-3)
    # the two-level value is far better than the tolerance; frozen from a convergence study
    assert abs(T.value / (math.pi / 8) - 1) < 1e-6
    assert abs(L.value / J0SQ - 1) < 1e-6
    assert T.estimate > abs(T.value - math.pi / 8)
    assert np.all(T.nodal >= 0)
    assert np.all(L.nodal >= 0)


def test_scaling_law():
    T1 = fem.solve_torsion(fem.mesh(StarDomain(()), 0.05)).value
    T2 = fem.solve_torsion(fem.mesh(StarDomain(((0, 1.0, 0.0),)), 0.1)).value
    assert T2 == pytest.approx(16 * T1, rel=1e-5)


def test_square_and_rectangles():
    sq = fem.mesh(rectangle(1, 1), 0.03)
    oracle = square_torsion_oracle()
    assert oracle == pytest.approx(0.0351442, abs=1e-7)
    assert fem.solve_torsion(sq).value == pytest.approx(oracle, rel=1e-2)
    assert fem.solve_eigen(sq).value == pytest.approx(2 * math.pi**2, rel=5e-3)
    r = fem.mesh(rectangle(1, 2), 0.03)
    assert fem.solve_eigen(r).value == pytest.approx(math.pi**2 * 1.25, rel=5e-3)


def test_rectangle_series_agrees_with_oracle():
    for a, b in ((1, 1), (1, 2), (1, 0.1)):
        assert fem.rectangle_torsion(a, b) == pytest.approx(square_torsion_oracle(a, b), rel=2e-6)


def test_convergence_order():
    assert 1.8 <= fem.convergence_order(StarDomain(()), 0.05, "torsion", math.pi / 8) <= 2.2
    assert 1.8 <= fem.convergence_order(StarDomain(()), 0.05, "eigen", J0SQ) <= 2.2


def test_inverse_iteration_residual():
    lv = fem.eigen_level(fem.mesh(StarDomain(()), 0.1))
    assert lv.residual <= 1e-10
    # lambda_1 / lambda_2 is close to 1 here; plain inverse iteration stalls and Lanczos takes over
    thin_mesh = fem.mesh(thinning_sequence("rectangle", 32), 0.05)
    thin = fem.eigen_level(thin_mesh)
    assert thin.residual <= 1e-10
    assert fem.solve_eigen(thin_mesh).value == pytest.approx(math.pi**2 * (1 + 32**2), rel=1e-3)


def test_cg_fallback_matches_direct():
    m = fem.mesh(StarDomain(()), 0.1)
    assert fem.torsion_level(m, "cg").value == pytest.approx(fem.torsion_level(m).value, rel=1e-9)


def test_disconnected_mesh_singular():
    nodes = np.array([[0, 0], [1, 0], [0, 1], [5, 5], [6, 5], [5, 6.0]])
    tri = np.array([[0, 1, 2], [3, 4, 5]])
    m = fem.Mesh(nodes, tri, np.ones(6, dtype=bool), 0.1)
    with pytest.raises(fem.SolverError):
        fem.solve_torsion(m)


def test_ball_exact():
    b = fem.ball_exact(2)
    assert (b.T, b.Lam, b.P, b.V) == pytest.approx((math.pi / 8, J0SQ, 2 * math.pi, math.pi))
    assert fem.ball_exact(3).Lam == pytest.approx(math.pi**2)
    assert fem.ball_exact(4).Lam == pytest.approx(14.6819706421239, rel=1e-12)


def test_mesh_dump(tmp_path):
    m = fem.mesh(PolygonDomain(np.array([[0, 0], [1, 0], [0, 1.0]])), 0.2)
    nodes_path, tri_path = m.dump_csv(tmp_path / "tri")
    with open(nodes_path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "y", "boundary"] and len(rows) == m.n_nodes + 1
    with open(tri_path) as fh:
        assert len(list(csv.reader(fh))) == m.n_triangles + 1


def test_mesh_immutable(disk_mesh):
    with pytest.raises(ValueError):
        disk_mesh.nodes[0, 0] = 1.0
