"""Constrained zonotope set operations: frozen small examples, geometric
invariants on random instances, serialization, and immutability."""

import numpy as np
import pytest

from flexcz.errors import EmptyIntersectionError, SchemaError
from flexcz.sets import (
    ConstrainedZonotope,
    Halfspace,
    HPolytope,
    Zonotope,
    bounding_zonotope,
    contains,
    from_dict,
    from_json,
    halfspace_is_cutting,
    intersect_halfspace,
    intersect_hyperplane,
    is_empty,
    linear_map,
    support,
    to_json,
)

SQRT2_INV = 0.7071067811865475


def box_cz(lb, ub) -> ConstrainedZonotope:
    return ConstrainedZonotope.from_zonotope(bounding_zonotope(lb, ub))


def test_bounding_zonotope_interval():
    z = bounding_zonotope([-1.0], [3.0])
    np.testing.assert_allclose(z.c, [1.0])
    np.testing.assert_allclose(z.G, [[2.0]])


def test_bounding_zonotope_zero_width():
    z = bounding_zonotope([2.0, -1.0], [2.0, 1.0])
    assert z.c == pytest.approx([2.0, 0.0])
    assert z.G[0] == pytest.approx([0.0, 0.0])
    assert z.G[1] == pytest.approx([0.0, 1.0])


def test_bounding_zonotope_rejects_inverted():
    with pytest.raises(ValueError):
        bounding_zonotope([1.0], [0.0])


def test_zonotope_support():
    z = Zonotope(np.zeros(2), np.array([[1.0, 1.0], [1.0, -1.0]]))
    assert z.support([1.0, 0.0]) == pytest.approx(2.0)
    assert z.support([0.0, 1.0]) == pytest.approx(2.0)


def test_halfspace_cut_interval():
    cz = box_cz([-1.0], [1.0])
    cut = intersect_halfspace(cz, Halfspace(np.array([1.0]), 0.0))
    # d_m = 0 - 0 + 1 = 1; new row [g, d_m/2] = [1, 0.5], rhs -0.5
    np.testing.assert_allclose(cut.A, [[1.0, 0.5]])
    np.testing.assert_allclose(cut.b, [-0.5])
    hi, _ = support(cut, [1.0])
    lo, _ = support(cut, [-1.0])
    assert hi == pytest.approx(0.0, abs=1e-9)
    assert -lo == pytest.approx(-1.0, abs=1e-9)


def test_halfspace_cut_square_diagonal():
    cz = box_cz([-1.0, -1.0], [1.0, 1.0])
    cut = intersect_halfspace(cz, Halfspace(np.array([1.0, 1.0]), 1.0))
    val, _ = support(cut, [SQRT2_INV, SQRT2_INV])
    assert val == pytest.approx(SQRT2_INV, abs=1e-9)
    # the untouched corner is still there
    val, _ = support(cut, [-SQRT2_INV, -SQRT2_INV])
    assert val == pytest.approx(2.0 * SQRT2_INV, abs=1e-9)


def test_separating_halfspace_raises():
    cz = box_cz([-1.0], [1.0])
    with pytest.raises(EmptyIntersectionError):
        intersect_halfspace(cz, Halfspace(np.array([1.0]), -2.0))


def test_hyperplane_cut():
    cz = box_cz([-1.0, -1.0], [1.0, 1.0])
    plane = intersect_hyperplane(cz, np.array([1.0, 0.0]), 0.5)
    assert plane.m == 1
    assert plane.n_g == cz.n_g
    hi, _ = support(plane, [1.0, 0.0])
    lo, _ = support(plane, [-1.0, 0.0])
    assert hi == pytest.approx(0.5, abs=1e-9)
    assert -lo == pytest.approx(0.5, abs=1e-9)
    assert not is_empty(plane)


def test_infeasible_hyperplane_makes_empty_set():
    cz = box_cz([-1.0], [1.0])
    plane = intersect_hyperplane(cz, np.array([1.0]), 5.0)
    assert is_empty(plane)


def test_contains():
    cz = box_cz([-1.0, -1.0], [1.0, 1.0])
    cut = intersect_halfspace(cz, Halfspace(np.array([1.0, 1.0]), 1.0))
    assert contains(cut, [0.0, 0.0])
    assert contains(cut, [1.0, 0.0])
    assert not contains(cut, [0.9, 0.9])
    assert not contains(cut, [2.0, 0.0])


def test_halfspace_is_cutting():
    cz = box_cz([-1.0, -1.0], [1.0, 1.0])
    assert halfspace_is_cutting(cz, Halfspace(np.array([1.0, 0.0]), 0.5))
    assert not halfspace_is_cutting(cz, Halfspace(np.array([1.0, 0.0]), 1.5))


def test_linear_map_rotation():
    cz = box_cz([-1.0, -1.0], [1.0, 1.0])
    th = 0.3
    R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    rot = linear_map(cz, R)
    d = np.array([0.8, -0.6])
    a, _ = support(rot, d)
    b, _ = support(cz, R.T @ d)
    assert a == pytest.approx(b, abs=1e-9)


def test_linear_map_selection_equals_matmul():
    rng = np.random.default_rng(5)
    c = rng.standard_normal(6)
    G = rng.standard_normal((6, 9))
    A = rng.standard_normal((2, 9))
    b = rng.standard_normal(2) * 0.1
    cz = ConstrainedZonotope(c, G, A, b)
    M = np.zeros((3, 6))
    M[0, 4] = 1.0
    M[1, 0] = 1.0
    M[2, 2] = 1.0
    fast = linear_map(cz, M)
    ref = ConstrainedZonotope(M @ c, M @ G, A, b)
    assert np.array_equal(fast.c, ref.c)
    assert np.array_equal(np.abs(fast.G), np.abs(ref.G))
    assert fast.A is cz.A


def test_json_round_trip_byte_exact():
    rng = np.random.default_rng(6)
    cz = ConstrainedZonotope(rng.standard_normal(3),
                             rng.standard_normal((3, 5)),
                             rng.standard_normal((2, 5)),
                             rng.standard_normal(2))
    text = to_json(cz)
    back = from_json(text)
    assert np.array_equal(back.c, cz.c)
    assert np.array_equal(back.G, cz.G)
    assert np.array_equal(back.A, cz.A)
    assert np.array_equal(back.b, cz.b)
    assert to_json(back) == text


def test_from_dict_rejects_bad_documents():
    with pytest.raises(SchemaError):
        from_dict({"schema": "flexcz-cz/2", "dim": 1, "n_g": 1,
                   "c": [0.0], "G": [1.0], "A": [], "b": []})
    with pytest.raises(SchemaError):
        from_dict({"schema": "flexcz-cz/1", "dim": 2, "n_g": 1,
                   "c": [0.0], "G": [1.0], "A": [], "b": []})


def test_arrays_are_adopted_read_only():
    c = np.zeros(2)
    G = np.eye(2)
    z = Zonotope(c, G)
    assert not z.c.flags.writeable
    assert not c.flags.writeable  # adopted, not copied
    with pytest.raises(ValueError):
        z.G[0, 0] = 5.0


def test_view_inputs_are_copied():
    buf = np.zeros((4, 4))
    z = Zonotope(buf[0, :2], buf[:2, :2])
    assert buf.flags.writeable  # the owner is untouched
    buf[0, 0] = 7.0
    assert z.c[0] == 0.0


# ---------------------------------------------------------------------------
# randomized invariants (small instance counts here; the acceptance suite
# runs the full 200-instance sweep)


def random_cut_box(rng, n_cuts=3):
    n = int(rng.integers(2, 5))
    lb = -1.0 - rng.random(n)
    ub = 1.0 + rng.random(n)
    cz = box_cz(lb, ub)
    center = cz.c
    for _ in range(n_cuts):
        h = rng.standard_normal(n)
        h /= np.linalg.norm(h)
        zeta = float(h @ center) + 0.2 + float(rng.random())
        cz = intersect_halfspace(cz, Halfspace(h, zeta))
    return cz


def test_redundant_cut_conservation():
    rng = np.random.default_rng(21)
    for _ in range(25):
        cz = random_cut_box(rng)
        d = rng.standard_normal(cz.dim)
        d /= np.linalg.norm(d)
        val, _ = support(cz, d)
        loose = intersect_halfspace(cz, Halfspace(d, val + 0.5))
        val2, _ = support(loose, d)
        assert val2 == pytest.approx(val, abs=1e-7)


def test_interval_slack_dominates_samples():
    rng = np.random.default_rng(22)
    for _ in range(25):
        n = int(rng.integers(2, 5))
        lb, ub = -np.ones(n), np.ones(n)
        z = bounding_zonotope(lb, ub)
        h = rng.standard_normal(n)
        zeta = float(h @ z.c) + float(rng.random())
        g = h @ z.G
        d_m = zeta - float(h @ z.c) + float(np.sum(np.abs(g)))
        alphas = rng.uniform(-1.0, 1.0, size=(50, n))
        xs = z.c + alphas @ z.G.T
        assert np.all(zeta - xs @ h <= d_m + 1e-9)


def test_zero_columns_are_transparent():
    rng = np.random.default_rng(23)
    for _ in range(10):
        cz = random_cut_box(rng)
        G2 = np.hstack([cz.G, np.zeros((cz.dim, 2))])
        A2 = np.hstack([cz.A, np.zeros((cz.m, 2))])
        padded = ConstrainedZonotope(cz.c, G2, A2, cz.b)
        d = rng.standard_normal(cz.dim)
        a, _ = support(cz, d)
        b, _ = support(padded, d)
        assert b == pytest.approx(a, abs=1e-9)
