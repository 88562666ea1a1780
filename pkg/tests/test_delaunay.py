import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flatnet.delaunay import (
    are_k_reachable,
    build_one_network,
    central_square,
    delaunay_triangulation,
    disk_points_reachable,
    edge_corner_squares,
    make_rectangle,
    vertical_distance,
)
from flatnet.errors import EdgeTooLong, PreconditionViolated, RadiusTooSmall
from flatnet.quad import QuadScalar, vec
from flatnet.surface import parallelogram_torus, slit_double_cover
from flatnet.trace import SurfacePoint


def euler_counts(S):
    r_hat = S.num_zeros
    return 2 * (2 * S.genus - 2 + r_hat), 3 * (2 * S.genus - 2 + r_hat)


def test_torus_triangulation(torus):
    dt = delaunay_triangulation(torus)
    assert (len(dt.triangles), len(dt.edges)) == (2, 3)
    for tri in dt.triangles:
        assert tri.radius == pytest.approx(math.sqrt(2) / 2)


def test_slit_cover_triangulation(slit):
    dt = delaunay_triangulation(slit)
    assert (len(dt.triangles), len(dt.edges)) == (8, 12)
    assert dt.empty_disk_violations() == 0


@pytest.mark.parametrize("shear", [1, 2, 3, 4, 5])
def test_flips_from_sheared_torus_terminate_quickly(shear):
    dt = delaunay_triangulation(parallelogram_torus(vec(1, 0), vec(shear, 1)))
    assert dt.flips <= 50
    assert (len(dt.triangles), len(dt.edges)) == (2, 3)
    assert dt.empty_disk_violations() == 0


@settings(max_examples=25, deadline=None)
@given(st.integers(-6, 6), st.integers(1, 4), st.fractions(Fraction(1, 3), Fraction(3), max_denominator=7))
def test_euler_and_empty_disk_on_tori(a, b, c):
    S = parallelogram_torus(vec(c, 0), vec(a, b))
    dt = delaunay_triangulation(S)
    assert (len(dt.triangles), len(dt.edges)) == euler_counts(S)
    assert dt.empty_disk_violations() == 0


@settings(max_examples=15, deadline=None)
@given(st.fractions(Fraction(1, 20), Fraction(19, 20), max_denominator=40), st.fractions(Fraction(-1, 5), Fraction(1, 5), max_denominator=20))
def test_euler_and_empty_disk_on_slit_covers(a, b):
    lam = QuadScalar(a, b, 2)
    if not 0 < lam < 1:
        return
    S = slit_double_cover(lam)
    dt = delaunay_triangulation(S)
    assert (len(dt.triangles), len(dt.edges)) == euler_counts(S)
    assert dt.empty_disk_violations() == 0


def band(torus):
    return make_rectangle(torus, SurfacePoint(0, 0.0, 0.0), 1.0, 0.1)


def test_vertical_distance_examples(torus):
    R = band(torus)
    assert vertical_distance(torus, SurfacePoint(0, 0.5, 0.05), R, 1.0) == 0
    assert vertical_distance(torus, SurfacePoint(0, 0.5, 0.3), R, 1.0) == pytest.approx(0.2, abs=1e-12)
    assert vertical_distance(torus, SurfacePoint(0, 0.5, 0.3), R, 0.05) == math.inf


def test_reachability_threshold(torus):
    R = band(torus)
    x, y = SurfacePoint(0, 0.5, 0.3), SurfacePoint(0, 0.2, 0.15)
    assert are_k_reachable(torus, x, y, 1.9, [R]) is None
    assert are_k_reachable(torus, x, y, 2.0, [R]) is R
    assert are_k_reachable(torus, x, y, 5.0, []) is None
    inside = SurfacePoint(0, 0.3, 0.05)
    assert are_k_reachable(torus, inside, inside, 0.0, [R]) is R


def test_central_square(torus):
    dt = delaunay_triangulation(torus)
    A = central_square(dt, 0, Fraction(2, 5))
    assert A.width == A.height == pytest.approx(0.4)
    assert A.embedded and A.exact_measure() == Fraction(4, 25)
    with pytest.raises(RadiusTooSmall):
        central_square(dt, 0, Fraction(4, 5))


def test_edge_corner_squares(torus):
    dt = delaunay_triangulation(torus)
    for slot in dt.edge_slots:
        A1, A2 = edge_corner_squares(dt, slot, Fraction(2, 5))
        for A in (A1, A2):
            assert A.side_exact == Fraction(2, 15)
            assert A.exact_measure() == Fraction(4, 225) >= Fraction(4, 25) / 9
    with pytest.raises(EdgeTooLong):
        edge_corner_squares(dt, dt.edge_slots[0], Fraction(2, 5), max_edge=0.5)


def check_network(S, delta):
    g = build_one_network(S, delta, samples=1000, seed=0)
    d = Fraction(delta)
    assert len(g.squares) <= 8 * S.nu_delaunay
    assert all(R.side_exact in (d, d / 3) for R in g.squares)
    assert g.min_measure() >= d * d / 9
    assert g.connected
    return g


def test_torus_network(torus):
    g = check_network(torus, Fraction(3, 10))
    assert g.fully_covered


def test_slit_network(slit):
    g = check_network(slit, Fraction(1, 10))
    assert g.fully_covered


def test_network_needs_short_delta(torus):
    with pytest.raises(PreconditionViolated):
        build_one_network(torus, Fraction(3, 5))


@pytest.mark.parametrize("which, delta", [("torus", Fraction(3, 10)), ("slit", Fraction(1, 10))])
def test_circumdisk_is_reachable_from_central_square(which, delta, torus, slit):
    S = torus if which == "torus" else slit
    dt = delaunay_triangulation(S)
    for t in range(len(dt.triangles)):
        assert disk_points_reachable(dt, t, delta, n=100, seed=t) == 0
