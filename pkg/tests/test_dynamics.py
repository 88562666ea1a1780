import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flatnet.dynamics import (
    HorizontalArc,
    ergodic_average,
    first_return_iet,
    unique_ergodicity_probe,
    vertical_flow,
)
from flatnet.errors import HitSingularity
from flatnet.quad import parse_scalar
from flatnet.surface import square_torus
from flatnet.trace import SurfacePoint

PHI = (1 + math.sqrt(5)) / 2
GOLDEN = (1.0, PHI)
CIRCLE = HorizontalArc(0, 0.0, 0.0, 1.0)
HALF = HorizontalArc(0, 0.0, 0.0, 0.5)


def test_vertical_flow_endpoints(torus):
    end = vertical_flow(torus, SurfacePoint(0, 0.5, 0.5), 0.4).end
    assert (end.x, end.y) == pytest.approx((0.5, 0.9))
    end = vertical_flow(torus, SurfacePoint(0, 0.5, 0.5), 1.0).end
    assert end.poly == 0 and (end.x, end.y) == pytest.approx((0.5, 0.5))


def test_leaf_into_slit_endpoint_hits(slit):
    lam = float(parse_scalar("sqrt2-1"))
    with pytest.raises(HitSingularity) as exc:
        vertical_flow(slit, SurfacePoint(0, lam, 0.3), 2.0)
    assert exc.value.details["time"] == pytest.approx(0.7, abs=1e-12)


def test_golden_circle_section_is_a_rotation(torus):
    T = first_return_iet(torus, CIRCLE, direction=GOLDEN)
    assert len(T.starts) == 2
    shift = {round(t % 1.0, 12) for t in T.translations}
    assert shift == {round(1 / PHI, 12)}
    assert T.tiling_defect() < 1e-9


def test_vertical_circle_section_is_the_identity(torus):
    T = first_return_iet(torus, CIRCLE)
    assert (len(T.starts), T.return_times) == (1, [pytest.approx(1.0)])
    assert T.translations == [0.0]


@settings(max_examples=50, deadline=None)
@given(
    st.integers(0, 4), st.sampled_from([2, 3, 5, 6, 7, 10, 11]), st.integers(1, 4),
    st.floats(0.02, 0.95), st.floats(0.0, 0.9),
)
def test_three_gap_property(m, n, q, length, height):
    slope = (m + math.sqrt(n)) / q  # quadratic irrational
    T = first_return_iet(square_torus(), HorizontalArc(0, 0.0, height, length), direction=(1.0, slope))
    assert len(T.distinct_return_times(1e-9)) <= 3
    assert T.tiling_defect() < 1e-9


def test_full_circle_averages(torus):
    x = SurfacePoint(0, 0.3, 0.7)
    assert ergodic_average(torus, x, CIRCLE, 10).average == 1.0
    for T in (3.5, 17.2):
        avg = ergodic_average(torus, x, CIRCLE, T).average
        assert math.floor(T) / T <= avg <= math.ceil(T) / T


def test_golden_equidistribution(torus):
    x = SurfacePoint(0, 0.1234, 0.5678)
    a = ergodic_average(torus, x, HALF, 1e4, direction=GOLDEN)
    assert abs(a.normalized - 0.5) < 0.01
    b = ergodic_average(torus, x, HALF, 2e4, direction=GOLDEN)
    assert abs(b.average - a.average) <= 20 * math.log(1e4) / 1e4


def test_probe_on_golden_torus(torus):
    rng = random.Random(7)
    starts = [SurfacePoint(0, rng.random(), rng.random()) for _ in range(8)]
    rep = unique_ergodicity_probe(torus, HALF, starts, 1e4, direction=GOLDEN)
    assert rep.max_deviation < 0.02
    assert not rep.persistent()


def test_probe_closed_leaves(torus):
    arc = HorizontalArc(0, 0.0, 0.0, 0.5)
    rep = unique_ergodicity_probe(torus, arc, [SurfacePoint(0, 0.25, 0.5), SurfacePoint(0, 0.75, 0.5)], 100)
    avgs = [r.normalized for r in rep.rows]
    assert avgs == [pytest.approx(1.0), pytest.approx(0.0)]
    assert rep.max_deviation == pytest.approx(1.0)


def test_probe_flags_insufficient_starts(slit):
    lam = float(parse_scalar("sqrt2-1"))
    starts = [SurfacePoint(0, 0.1, 0.2), SurfacePoint(0, lam, 0.3), SurfacePoint(1, lam, 0.6)]
    rep = unique_ergodicity_probe(slit, HorizontalArc(0, 0.5, 0.5, 0.3), starts, 50)
    assert rep.insufficient and math.isnan(rep.max_deviation)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 0.29), st.integers(1, 100))
def test_crossings_match_iet_orbit(r, n):
    torus = square_torus()
    arc = HorizontalArc(0, 0.0, 0.0, 0.3)
    T = first_return_iet(torus, arc, direction=GOLDEN)
    pos, elapsed = r, 0.0
    for _ in range(n):
        k = T.index(pos)
        elapsed += T.return_times[k]
        pos += T.translations[k]
    # start just above the arc so the count is exactly the orbit length
    res = ergodic_average(torus, SurfacePoint(0, r + 1e-7 / PHI, 1e-7), arc, elapsed, direction=GOLDEN)
    assert res.crossings == n


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99), st.floats(0.1, 30))
def test_average_is_flow_invariant(x, y, s):
    torus = square_torus()
    T = 500.0
    start = SurfacePoint(0, x, y)
    moved = vertical_flow(torus, start, s, direction=GOLDEN).end
    a = ergodic_average(torus, start, HALF, T, direction=GOLDEN)
    b = ergodic_average(torus, moved, HALF, T, direction=GOLDEN)
    in_s = ergodic_average(torus, start, HALF, s, direction=GOLDEN).crossings
    assert abs(a.average - b.average) <= (in_s + 1) / T + 1e-12
