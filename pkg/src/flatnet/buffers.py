"""Strips along a saddle connection, buffered squares, spacing sequences and overlap checks."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .delaunay import RectangleImm, _move, make_rectangle
from .dynamics import VERTICAL, first_return_iet
from .errors import (
    DeltaUnachievable,
    HitSingularity,
    IncompleteSection,
    MeasureOverflow,
    PreconditionViolated,
    TracingBudgetExceeded,
    VerticalGamma,
)
from .flow import DivergenceProfile
from .quad import Vec2
from .surface import SaddleConnection, TranslationSurface
from .trace import Arc, SurfacePoint, Tracer, _vertex_at, make_arc, unit

# ---------------------------------------------------------------------------
# strips


def saddle_arc(S: TranslationSurface, holonomy: Vec2, tracer: Tracer | None = None, start: int | None = None, index: int = 0) -> Arc:
    """The ``index``-th saddle connection with the given holonomy, as an arc.

    Candidates are straight segments leaving a cone point (or ``start``) in
    the holonomy direction that reach a vertex after exactly ``|holonomy|``
    without meeting one earlier.
    """
    tracer = tracer or Tracer(S)
    hx, hy = holonomy.to_float()
    length = math.hypot(hx, hy) * S.scale
    if length == 0:
        raise PreconditionViolated("zero holonomy")
    u = (hx / length * S.scale, hy / length * S.scale)
    found = []
    sings = [start] if start is not None else range(len(S.singularities))
    for s in sings:
        for p, v in tracer.corners_for(s, u):
            try:
                arc = make_arc(tracer, None, u, length, at_vertex=(p, v))
            except HitSingularity:
                continue
            last = arc.pieces[-1]
            if any(abs(last[3] - vx) < 1e-9 and abs(last[4] - vy) < 1e-9 for vx, vy in tracer.verts[last[0]]):
                found.append(arc)
    if len(found) <= index:
        raise PreconditionViolated(f"no saddle connection with holonomy {holonomy}", found=len(found))
    return found[index]


def _gamma_arc(S, gamma, tracer) -> Arc:
    if isinstance(gamma, Arc):
        return gamma
    if isinstance(gamma, SaddleConnection):
        return saddle_arc(S, gamma.holonomy, tracer, start=gamma.start)
    if isinstance(gamma, Vec2):
        return saddle_arc(S, gamma, tracer)
    raise TypeError("gamma must be an Arc, SaddleConnection or holonomy Vec2")


@dataclass
class VerticalStrip:
    """Piece of the strip decomposition swept by the flow from ``[start, start + length)`` on the arc.

    ``width`` is measured across the flow and ``height`` along it; the two
    vertical sides carry cone points.
    """

    index: int
    start: float
    length: float
    width: float
    height: float
    translation: float
    arc: Arc = field(repr=False)
    direction: tuple[float, float] = VERTICAL

    @property
    def area(self) -> float:
        return self.width * self.height


def _components(arc: Arc, u) -> tuple[float, float]:
    """Arc direction across (``right``) and along the flow ``u``."""
    gx, gy = arc.direction
    return gx * u[1] - gy * u[0], gx * u[0] + gy * u[1]


def vertical_strips(
    S: TranslationSurface, gamma, direction=None, time_bound: float | None = None, tracer: Tracer | None = None
) -> list[VerticalStrip]:
    """Decompose ``S`` into strips of the flow with top and bottom on ``gamma``.

    Strip sides are the leaves through cone points, cut at their first hit of
    ``gamma``; the strips are the intervals of the first-return map.
    """
    tracer = tracer or Tracer(S)
    u = unit(direction or VERTICAL)
    if isinstance(gamma, (Vec2, SaddleConnection)):
        hol = gamma if isinstance(gamma, Vec2) else gamma.holonomy
        if direction is None and not hol.x:
            raise VerticalGamma("gamma is vertical")
    arc = _gamma_arc(S, gamma, tracer)
    across, _ = _components(arc, u)
    if abs(across) < 1e-12:
        raise VerticalGamma("gamma is parallel to the flow")
    try:
        iet = first_return_iet(S, arc, direction=u, time_bound=time_bound, tracer=tracer)
    except IncompleteSection as exc:
        raise TracingBudgetExceeded(f"strip decomposition incomplete: {exc}", **exc.details) from exc
    strips = [
        VerticalStrip(k, a, l, l * abs(across), rt, tr, arc, u)
        for k, (a, l, tr, rt) in enumerate(zip(iet.starts, iet.lengths, iet.translations, iet.return_times))
    ]
    covered = math.fsum(s.area for s in strips)
    if abs(covered - S.float_area) > 1e-9 * S.float_area:
        # closed leaves that never meet gamma are missing
        raise IncompleteSection("strips do not cover the surface", covered=covered, area=S.float_area)
    return strips


@dataclass
class StripChoice:
    strip: VerticalStrip
    width_ok: bool
    width_at_t: float
    width_bound: float
    gamma_length_at_t: float


def widest_good_strip(
    S: TranslationSurface,
    gamma,
    t: float,
    profile: DivergenceProfile,
    direction=None,
    strips: list[VerticalStrip] | None = None,
) -> StripChoice:
    """Largest-area strip of ``X_t`` along ``gamma`` and whether its width is at least ``c / t**(nu*eps)``.

    The flow stretches widths by ``e^(t/2)`` and shrinks heights by the
    same factor, so strips of ``X_t`` are computed on ``S`` and rescaled.
    """
    if not t > 1:
        raise PreconditionViolated("need t > 1")
    tracer = Tracer(S)
    u = unit(direction or VERTICAL)
    arc = _gamma_arc(S, gamma, tracer)
    across, along = _components(arc, u)
    L = arc.length * math.hypot(math.exp(t / 2) * across, math.exp(-t / 2) * along)
    if L > 1 + 1e-12:
        raise PreconditionViolated(f"gamma has length {L} > 1 at time {t}", length=L)
    strips = strips or vertical_strips(S, arc, direction=u, tracer=tracer)
    best = max(strips, key=lambda s: (s.area, -s.index))
    nu = S.nu_strip
    w_t = best.width * math.exp(t / 2)
    bound = profile.c / t ** (nu * profile.eps)
    return StripChoice(best, w_t >= bound, w_t, bound, L)


# ---------------------------------------------------------------------------
# buffered squares


@dataclass
class BufferedSquare:
    square: RectangleImm
    buffer: RectangleImm
    delta: float
    overlap: int

    @property
    def product(self) -> float:
        return self.buffer.width * self.buffer.height

    def satisfies(self) -> bool:
        return self.overlap <= 1 and self.product >= self.delta


def return_profile(tracer: Tracer, R: RectangleImm) -> list[tuple[float, float, list[float]]]:
    """Returns of the bottom side to itself within the rectangle's height.

    The bottom side is cut where some orbit of length ``height`` meets a cone
    point or an end of the bottom side; on each piece the return times are
    constant because the side is perpendicular to the flow.  Returns
    ``(r0, r1, times)`` per piece.
    """
    up, down = R.up, (-R.up[0], -R.up[1])
    H, B = R.height, R.bottom
    cuts = {0.0, R.width}
    sources = []
    for s in tracer.S.singularities:
        if s.order > 1:
            sources += [(None, pv) for pv in tracer.corners_for(s.index, down)]
    for pt in (B.start, B.point_at(B.length)):
        sources.append((pt, _vertex_at(tracer, pt, down)))
    for pt, at in sources:
        try:
            for pc in tracer.trace(pt, down, H, at_vertex=at):
                for tm, r in B.hits(pc, closed=True):
                    if tm > 1e-12:
                        cuts.add(r)
        except HitSingularity:
            pass
    cuts = sorted(cuts)
    out = []
    for r0, r1 in zip(cuts, cuts[1:]):
        if r1 - r0 < 1e-12:
            continue
        times = []
        try:
            for pc in tracer.trace(B.point_at((r0 + r1) / 2), up, H):
                for tm, _ in B.hits(pc):
                    if 1e-9 < tm < H - 1e-12 and (not times or tm - times[-1] > 1e-9):
                        times.append(tm)
        except HitSingularity:
            pass
        out.append((r0, r1, times))
    return out


def overlap_count(tracer: Tracer, R: RectangleImm) -> int:
    """How many times the rectangle overlaps itself: the most returns of its bottom side within its height."""
    return max((len(times) for _, _, times in return_profile(tracer, R)), default=0)


def extend_to_buffer(
    S: TranslationSurface,
    anchor: SurfacePoint,
    side: float,
    height: float,
    delta: float,
    up=VERTICAL,
    tracer: Tracer | None = None,
) -> BufferedSquare:
    """Buffer of width ``side`` and height up to ``height`` over the square at ``anchor``.

    A buffer that overlaps itself more than once is shortened to the
    earliest second return of its bottom side, the tallest height that
    overlaps at most once; the square sits at the bottom of the buffer.
    """
    tracer = tracer or Tracer(S)
    if delta > S.float_area:
        raise DeltaUnachievable(f"delta {delta} exceeds the surface area", delta=delta)
    if side * height < delta:
        raise DeltaUnachievable("buffer product below delta", product=side * height, delta=delta)
    if height < side:
        raise PreconditionViolated("buffer must contain the square")
    build = lambda h: make_rectangle(S, anchor, side, h, tracer, up=up)
    buf = build(height)
    profile = return_profile(tracer, buf)
    ov = max((len(times) for _, _, times in profile), default=0)
    if ov > 1:
        h = min(times[1] for _, _, times in profile if len(times) > 1)
        if h < side:
            raise DeltaUnachievable("even the square overlaps itself twice")
        if side * h < delta:
            raise DeltaUnachievable("no buffer with overlap at most one reaches delta", product=side * h, delta=delta)
        buf = build(h)
        ov = overlap_count(tracer, buf)
    square = make_rectangle(S, anchor, side, side, tracer, up=up, label="square")
    return BufferedSquare(square, buf, delta, ov)


def buffered_square_from_strip(
    S: TranslationSurface, strip: VerticalStrip, delta: float, tracer: Tracer | None = None
) -> BufferedSquare:
    """Square of side equal to the strip width inside the smallest rectangle containing the strip."""
    tracer = tracer or Tracer(S)
    if delta > S.float_area:
        raise DeltaUnachievable(f"delta {delta} exceeds the surface area", delta=delta)
    u = strip.direction
    across, along = _components(strip.arc, u)
    w = strip.width
    if w <= 0:
        raise PreconditionViolated("strip width must be positive")
    H = strip.height + strip.length * abs(along)
    if w * H < delta:
        raise DeltaUnachievable("strip rectangle product below delta", product=w * H, delta=delta)
    # the enclosing rectangle is centred on the strip's centre; walk from
    # there to its lower-left corner
    centre = _move(tracer, strip.arc.point_at(strip.start + strip.length / 2), u, strip.height / 2)
    right = (u[1], -u[0])
    ox = -w / 2 * right[0] - H / 2 * u[0]
    oy = -w / 2 * right[1] - H / 2 * u[1]
    n = math.hypot(ox, oy)
    anchor = tracer.endpoint(centre, (ox / n, oy / n), n)
    return extend_to_buffer(S, anchor, w, H, delta, up=u, tracer=tracer)


# ---------------------------------------------------------------------------
# spacing sequence


def _two_sum(a: float, b: float) -> tuple[float, float]:
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


@dataclass
class SpacingSequence:
    t0: float
    eps: float
    values: list[float]  # rounded t_n
    lows: list[float] = field(repr=False)  # t_n = values[n] + lows[n] exactly
    gaps: list[float] = field(repr=False)
    max_residual: float = 0.0

    def ratio(self, n: int) -> float:
        """``t_n / (n log n log log n)``; defined for ``n >= 3``."""
        return self.values[n] / (n * math.log(n) * math.log(math.log(n)))

    def c_hat(self, upto: int | None = None) -> float:
        N = len(self.values) - 1 if upto is None else upto
        return max(self.ratio(n) for n in range(3, N + 1)) if N >= 3 else math.nan

    def partial_inverse_sum(self, upto: int | None = None) -> float:
        N = len(self.values) - 1 if upto is None else upto
        return math.fsum(1.0 / t for t in self.values[: N + 1])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "t_n", "gap", "C_n"])
        for n, t in enumerate(self.values):
            gap = self.gaps[n - 1] if n else 0.0
            c = f"{self.ratio(n):.12g}" if n >= 3 else ""
            w.writerow([n, f"{t:.15g}", f"{gap:.15g}", c])
        return buf.getvalue()


def spacing_sequence(t0: float, eps: float, N: int) -> SpacingSequence:
    """Solve ``t_{n+1} = t_n + eps * log(t_{n+1})`` for ``n < N``.

    ``t_n`` is carried as an unevaluated sum of two floats so the residual of
    each step is measured without the rounding of ``t_n`` itself.
    """
    if not t0 > 1 or not 0 < eps <= 1 or N < 0:
        raise PreconditionViolated("need t0 > 1, 0 < eps <= 1 and N >= 0")
    hi, lo = float(t0), 0.0
    values, lows, gaps = [hi], [lo], []
    worst = 0.0

    def log_dd(h, l):
        return math.log(h) + l / h

    for _ in range(N):
        g = eps * log_dd(hi, lo)
        for _ in range(100):
            nh, nl = _two_sum(hi, g)
            nl += lo
            f = g - eps * log_dd(nh, nl)
            step = f / (1 - eps / (nh + nl))
            g -= step
            if abs(step) <= 1e-16 * max(1.0, g):
                break
        nh, err = _two_sum(hi, g)
        nl = err + lo
        nh, nl = _two_sum(nh, nl)
        res = abs(g - eps * log_dd(nh, nl))
        worst = max(worst, res)
        if not g > 0:
            raise PreconditionViolated("sequence stopped increasing")
        hi, lo = nh, nl
        values.append(hi)
        lows.append(lo)
        gaps.append(g)
    return SpacingSequence(float(t0), eps, values, lows, gaps, worst)


# ---------------------------------------------------------------------------
# Paley-Zygmund overlap checks


def _grid(rect_sets):
    xs = sorted({c for rects in rect_sets for r in rects for c in (r[0], r[2])})
    ys = sorted({c for rects in rect_sets for r in rects for c in (r[1], r[3])})
    return np.array(xs, dtype=float), np.array(ys, dtype=float)


def _mask(rects, xs, ys) -> np.ndarray:
    m = np.zeros((max(len(xs) - 1, 0), max(len(ys) - 1, 0)), dtype=bool)
    for x0, y0, x1, y1 in rects:
        i0, i1 = np.searchsorted(xs, x0), np.searchsorted(xs, x1)
        j0, j1 = np.searchsorted(ys, y0), np.searchsorted(ys, y1)
        m[i0:i1, j0:j1] = True
    return m


def _cell_areas(xs, ys) -> np.ndarray:
    return np.outer(np.diff(xs), np.diff(ys))


def union_measure(rects) -> float:
    """Area of a union of axis-parallel rectangles ``(x0, y0, x1, y1)``."""
    if not rects:
        return 0.0
    xs, ys = _grid([rects])
    return float((_cell_areas(xs, ys) * _mask(rects, xs, ys)).sum())


def intersection_measure(A, B) -> float:
    if not A or not B:
        return 0.0
    xs, ys = _grid([A, B])
    return float((_cell_areas(xs, ys) * (_mask(A, xs, ys) & _mask(B, xs, ys))).sum())


def monte_carlo_intersection(A, B, samples: int, rng: np.random.Generator, box=(0.0, 0.0, 1.0, 1.0)):
    """Monte Carlo estimate of ``|A ∩ B|`` with its standard error."""
    x0, y0, x1, y1 = box
    pts = rng.random((samples, 2))
    px = x0 + pts[:, 0] * (x1 - x0)
    py = y0 + pts[:, 1] * (y1 - y0)

    def inside(rects):
        hit = np.zeros(samples, dtype=bool)
        for a, b, c, d in rects:
            hit |= (px >= a) & (px < c) & (py >= b) & (py < d)
        return hit

    both = inside(A) & inside(B)
    area = (x1 - x0) * (y1 - y0)
    p = both.mean()
    return area * p, area * math.sqrt(p * (1 - p) / samples)


@dataclass
class PZReport:
    K: float
    measures: list[float]
    partial_sums: list[float]
    worst_pair: tuple[int, int] | None
    worst_ratio: float
    condition_i: bool
    at_least: list[float]  # at_least[m-1] = measure of points in >= m sets
    immersed: list[bool] = field(default_factory=list)

    def to_text(self) -> str:
        return (
            json.dumps(
                {
                    "K": self.K,
                    "condition_i": self.condition_i,
                    "worst_pair": list(self.worst_pair) if self.worst_pair else None,
                    "worst_ratio": self.worst_ratio,
                    "measures": self.measures,
                    "partial_sums": self.partial_sums,
                    "at_least": self.at_least,
                    "immersed_overlaps": self.immersed,
                },
                indent=2,
                sort_keys=True,
            )
            + "\n"
        )


def pz_overlap_check(sets, K: float, total: float = 1.0, nominal=None) -> PZReport:
    """Check ``|A_n ∩ A_m| <= K |A_n| |A_m|`` for all pairs and tabulate multiplicities.

    ``sets`` are lists of rectangles in a common chart of measure ``total``.
    ``nominal`` optionally gives each set's area before overlaps; a smaller
    union measure is flagged as an immersed overlap.
    """
    sets = [list(s) for s in sets]
    xs, ys = _grid(sets)
    if len(xs) < 2 or len(ys) < 2:
        cells = np.zeros((0, 0))
        masks = [np.zeros((0, 0), dtype=bool) for _ in sets]
    else:
        cells = _cell_areas(xs, ys)
        masks = [_mask(s, xs, ys) for s in sets]
    measures = [float((cells * m).sum()) for m in masks]
    for n, mu in enumerate(measures):
        if mu > total * (1 + 1e-12):
            raise MeasureOverflow(f"set {n} has measure {mu} > {total}", set=n, measure=mu)
    sums = list(np.cumsum(measures)) if measures else []
    worst, worst_pair, ok = -math.inf, None, True
    for n in range(len(sets)):
        for m in range(n + 1, len(sets)):
            inter = float((cells * (masks[n] & masks[m])).sum())
            prod = measures[n] * measures[m]
            ok &= inter <= K * prod * (1 + 1e-12) + 1e-15
            ratio = inter / prod if prod > 0 else (math.inf if inter > 0 else 0.0)
            if ratio > worst:
                worst, worst_pair = ratio, (n, m)
    count = sum(m.astype(int) for m in masks) if masks else np.zeros((0, 0), dtype=int)
    at_least = [float((cells * (count >= k)).sum()) for k in range(1, len(sets) + 1)]
    immersed = []
    if nominal is not None:
        immersed = [mu < nom * (1 - 1e-9) for mu, nom in zip(measures, nominal)]
    return PZReport(K, measures, [float(s) for s in sums], worst_pair, worst if worst_pair else 0.0, ok, at_least, immersed)


def _wrap_x(x0: float, x1: float):
    """Split ``[x0, x1)`` reduced mod 1 into intervals of ``[0, 1)``."""
    shift = math.floor(x0)
    a, b = x0 - shift, x1 - shift
    if b <= 1:
        return [(a, b)]
    return [(a, 1.0), (0.0, b - 1)]


def pullback_family(c: float, eps: float, t0: float, N: int, alpha: float, center=(0.5, 0.5)):
    """Pullbacks to the base torus of squares of side ``c / t_n^(eps/2)`` in ``X_{t_n}``.

    The base torus has lattice ``(1, 0), (alpha, 1)``; a square of side
    ``s`` in ``X_t`` pulls back to a rectangle ``s e^(-t/2)`` wide and
    ``s e^(t/2)`` tall, cut into pieces of the unit square.  Returns the
    sets, their nominal areas and the spacing sequence used.
    """
    seq = spacing_sequence(t0, eps, N - 1)
    sets, nominal = [], []
    for t in seq.values:
        side = c / t ** (eps / 2)
        w, h = side * math.exp(-t / 2), side * math.exp(t / 2)
        x0, y0 = center[0] - w / 2, center[1] - h / 2
        y1 = y0 + h
        rects = []
        k = math.floor(y0)
        while k < y1:
            lo, hi = max(y0, k), min(y1, k + 1)
            if hi > lo:
                for a, b in _wrap_x(x0 - k * alpha, x0 - k * alpha + w):
                    rects.append((a, lo - k, b, hi - k))
            k += 1
        sets.append(rects)
        nominal.append(w * h)
    return sets, nominal, seq


def overlap_constant(c: float, delta: float) -> float:
    """The overlap constant ``(4 + c^2) / (delta c^2)``."""
    return (4 + c * c) / (delta * c * c)
