import numpy as np
from hypothesis import given, settings, strategies as st

from qbc import hull

from oracles import hull_vertices, polygon_excess, polygon_hausdorff, triangle_vertices

rates = st.floats(min_value=0.0, max_value=3.0, allow_nan=False)


def _signed_area(v):
    x, y = v[:, 0], v[:, 1]
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


@settings(max_examples=60, deadline=None)
@given(rates, rates, rates)
def test_triangle_polytope_matches_oracle(a, b, c):
    got = hull.triangle_polytope(a, b, c)
    ref = hull_vertices(triangle_vertices(a, b, c))
    assert polygon_hausdorff(got, ref) < 1e-9


def test_ccw_order_and_no_repeat():
    pts = np.random.default_rng(0).uniform(size=(40, 2))
    v = hull.ccw_hull(pts)
    assert _signed_area(v) > 0
    assert len(np.unique(np.round(v, 12), axis=0)) == len(v)
    assert polygon_hausdorff(v, pts) < 1e-12


def test_degenerate_hulls():
    assert hull.ccw_hull(np.array([[0.5, 0.5]])).shape == (1, 2)
    seg = hull.ccw_hull(np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 0.0]]))
    assert len(seg) == 2


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_distances_match_oracle(seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(size=(8, 2))
    b = rng.uniform(size=(8, 2)) * 0.8 + 0.1
    assert abs(hull.hausdorff(a, b) - polygon_hausdorff(a, b)) < 1e-9
    assert abs(hull.excess(a, b) - polygon_excess(a, b)) < 1e-9


def test_inclusion_and_support():
    small = hull.triangle_polytope(0.5, 0.5, 0.8)
    big = hull.triangle_polytope(0.6, 0.5, 0.9)
    assert hull.contains(big, small)
    assert not hull.contains(small, big)
    assert abs(hull.support(big, [1.0, 1.0]) - 0.9) < 1e-12
    u = hull.union_hull([small, hull.triangle_polytope(1.0, 0.0, 1.0)])
    assert abs(hull.support(u, [1.0, 0.0]) - 1.0) < 1e-12


def test_polytope_vertices_with_general_halfplanes():
    v = hull.polytope_vertices([(1.0, 0.0, 1.0), (1.0, 2.0, 2.0)])
    ref = np.array([[0, 0], [1, 0], [1, 0.5], [0, 1]])
    assert polygon_hausdorff(v, ref) < 1e-12
