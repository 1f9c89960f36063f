"""Exact projection baseline: variable elimination on known polytopes,
equality pre-elimination, redundancy pruning, caps, and 2-D hulls."""

import numpy as np
import pytest

from flexcz.baseline import (
    eliminate_equalities,
    fourier_motzkin_project,
    polygon_area,
    project_onto,
    redundancy_prune,
    vertices_2d,
)
from flexcz.errors import InfeasibleModelError, RowCapError
from flexcz.sets import HPolytope


def sorted_rows(a: np.ndarray) -> np.ndarray:
    return a[np.lexsort(a.T[::-1])]


def test_cube_projection(cube3):
    proj = fourier_motzkin_project(cube3, keep=[0, 1])
    assert proj.n == 2
    verts = vertices_2d(proj)
    assert verts.shape == (4, 2)
    assert polygon_area(verts) == pytest.approx(4.0, abs=1e-9)


def test_simplex_projection(simplex3):
    proj = fourier_motzkin_project(simplex3, keep=[0, 1])
    verts = vertices_2d(proj)
    assert verts.shape == (3, 2)
    assert polygon_area(verts) == pytest.approx(0.5, abs=1e-9)
    np.testing.assert_allclose(sorted_rows(verts),
                               [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]],
                               atol=1e-9)


def test_keep_order_controls_output_coordinates(simplex3):
    # output coordinate r corresponds to keep[r]; an asymmetric stretch
    # of the simplex would expose swapped axes, a symmetric one cannot,
    # so stretch x by 2 first
    S = HPolytope.from_inequalities(
        simplex3.A_ineq * np.array([0.5, 1.0, 1.0]), simplex3.b_ineq)
    proj = fourier_motzkin_project(S, keep=[1, 0])
    verts = sorted_rows(vertices_2d(proj))
    np.testing.assert_allclose(verts, [[0.0, 0.0], [0.0, 2.0], [1.0, 0.0]],
                               atol=1e-9)


def test_equality_elimination():
    # x + y + z = 1, x, y, z >= 0, keep (x, y) -> triangle x + y <= 1
    poly = HPolytope(-np.eye(3), np.zeros(3),
                     np.ones((1, 3)), np.ones(1))
    proj = fourier_motzkin_project(poly, keep=[0, 1])
    verts = sorted_rows(vertices_2d(proj))
    np.testing.assert_allclose(verts, [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]],
                               atol=1e-9)


def test_eliminate_equalities_protects_kept_columns():
    poly = HPolytope(-np.eye(3), np.zeros(3), np.ones((1, 3)), np.ones(1))
    reduced, keep_cols = eliminate_equalities(poly, protect=(0, 1))
    assert reduced.m_eq == 0
    assert 0 in keep_cols and 1 in keep_cols
    assert 2 not in keep_cols  # the unprotected column was eliminated


def test_inconsistent_equalities_raise():
    poly = HPolytope(np.zeros((0, 2)), np.zeros(0),
                     np.array([[1.0, 1.0], [1.0, 1.0]]), np.array([1.0, 2.0]))
    with pytest.raises(InfeasibleModelError):
        fourier_motzkin_project(poly, keep=[0])


def test_redundancy_prune():
    A = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0],
                  [1.0, 0.0], [1.0, 1.0]])
    b = np.array([1.0, 1.0, 1.0, 1.0, 2.0, 5.0])
    A2, b2 = redundancy_prune(A, b)
    assert A2.shape == (4, 2)
    np.testing.assert_allclose(sorted_rows(np.column_stack([A2, b2])),
                               sorted_rows(np.column_stack([A[:4], b[:4]])))


def test_row_cap():
    rng = np.random.default_rng(31)
    A = rng.standard_normal((30, 4))
    b = np.abs(rng.standard_normal(30)) + A @ np.zeros(4) + 1.0
    poly = HPolytope.from_inequalities(A, b)
    with pytest.raises(RowCapError):
        fourier_motzkin_project(poly, keep=[0, 1], prune_every=0, row_cap=40)


def test_project_onto_matches_fm(cube3):
    M = np.zeros((2, 3))
    M[0, 2] = 1.0
    M[1, 0] = 1.0
    a = project_onto(cube3, M)
    bproj = fourier_motzkin_project(cube3, keep=[2, 0])
    va = sorted_rows(vertices_2d(a))
    vb = sorted_rows(vertices_2d(bproj))
    np.testing.assert_allclose(va, vb, atol=1e-9)


def test_vertices_of_rotated_square():
    th = np.pi / 6.0
    R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    A = np.vstack([np.eye(2), -np.eye(2)]) @ R.T
    poly = HPolytope.from_inequalities(A, np.ones(4))
    verts = vertices_2d(poly)
    assert verts.shape == (4, 2)
    assert polygon_area(verts) == pytest.approx(4.0, abs=1e-9)
    # counter-clockwise orientation: positive shoelace terms throughout
    x, y = verts[:, 0], verts[:, 1]
    cross = x * np.roll(y, -1) - np.roll(x, -1) * y
    assert np.all(cross > 0)


def test_grid_feasible_set_projection_triangle(case4):
    from flexcz.grid import build_feasible_set

    case = case4.with_horizon(1)
    poly, idx = build_feasible_set(case, "lossless")
    proj = fourier_motzkin_project(poly, keep=[idx.p(0, 1), idx.q(0, 1)])
    verts = vertices_2d(proj)
    assert polygon_area(verts) == pytest.approx(0.16842105263157892, rel=1e-9)
    assert proj.m_ineq == 3
