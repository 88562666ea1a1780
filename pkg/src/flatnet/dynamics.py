"""Straight-line flow, first-return maps and ergodic-average probes.

The flow direction defaults to vertical.  A ``direction`` keyword allows the
unrotated square torus to carry a Kronecker flow of any slope, which keeps
horizontal circles available as sections.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field

from .errors import HitSingularity, IncompleteSection, PreconditionViolated
from .surface import TranslationSurface
from .trace import Arc, Piece, SurfacePoint, Tracer, first_hit, horizontal_arc, make_arc, unit

VERTICAL = (0.0, 1.0)


@dataclass(frozen=True)
class HorizontalArc:
    """Horizontal segment starting at ``(x, y)`` in polygon ``poly``."""

    poly: int
    x: float
    y: float
    length: float

    def __post_init__(self):
        if not self.length > 0:
            raise PreconditionViolated("arc length must be positive")

    def build(self, S: TranslationSurface, tracer: Tracer | None = None) -> Arc:
        return horizontal_arc(S, SurfacePoint(self.poly, float(self.x), float(self.y)), self.length, tracer)


def _as_arc(S, I, tracer) -> Arc:
    if isinstance(I, Arc):
        return I
    return I.build(S, tracer)


@dataclass
class Trajectory:
    start: SurfacePoint
    direction: tuple[float, float]
    pieces: list[Piece]
    length: float

    @property
    def end(self) -> SurfacePoint:
        p = self.pieces[-1]
        return SurfacePoint(p.poly, p.bx, p.by)


def vertical_flow(S: TranslationSurface, x: SurfacePoint, T: float, direction=None, tracer=None) -> Trajectory:
    """Flow ``x`` for time ``T``; raises :class:`HitSingularity` on reaching a cone point."""
    if not T > 0:
        raise PreconditionViolated("T must be positive")
    tracer = tracer or Tracer(S)
    u = unit(direction or VERTICAL)
    x = SurfacePoint(*x)
    pieces = list(tracer.trace(x, u, T))
    return Trajectory(x, u, pieces, T)


@dataclass
class IET:
    """First-return map to an arc, as an interval exchange.

    Interval ``k`` is ``[starts[k], starts[k] + lengths[k])`` in arc
    parameter; it is translated by ``translations[k]`` and returns after
    ``return_times[k]``.
    """

    starts: list[float]
    lengths: list[float]
    translations: list[float]
    return_times: list[float]
    arc_length: float

    @property
    def permutation(self) -> list[int]:
        """Position of each interval's image in the order of images."""
        images = sorted(range(len(self.starts)), key=lambda k: self.starts[k] + self.translations[k])
        rank = [0] * len(images)
        for pos, k in enumerate(images):
            rank[k] = pos
        return rank

    def __call__(self, r: float) -> float:
        return r + self.translations[self.index(r)]

    def index(self, r: float) -> int:
        for k in range(len(self.starts) - 1, -1, -1):
            if r >= self.starts[k] - 1e-15:
                return k
        raise PreconditionViolated(f"{r} is outside the section")

    def tiling_defect(self) -> float:
        """Measure of the symmetric difference between the image intervals and the arc."""
        imgs = sorted((s + t, s + t + l) for s, t, l in zip(self.starts, self.translations, self.lengths))
        defect = abs(imgs[0][0]) + abs(imgs[-1][1] - self.arc_length)
        for (a0, a1), (b0, b1) in zip(imgs, imgs[1:]):
            defect += abs(b0 - a1)
        return defect

    def distinct_return_times(self, tol: float = 1e-9) -> list[float]:
        out = []
        for t in sorted(self.return_times):
            if not out or t - out[-1] > tol:
                out.append(t)
        return out


def first_return_iet(
    S: TranslationSurface,
    I,
    direction=None,
    time_bound: float | None = None,
    samples: int = 256,
    tracer: Tracer | None = None,
) -> IET:
    """First-return map of the flow to the arc ``I``.

    Discontinuities come from backward leaves of cone points and of the arc
    endpoints.  Every interval is then sampled forward to read off its
    translation and return time.
    """
    tracer = tracer or Tracer(S)
    arc = _as_arc(S, I, tracer)
    u = unit(direction or VERTICAL)
    back = (-u[0], -u[1])
    transverse = abs(u[0] * arc.direction[1] - u[1] * arc.direction[0])
    if transverse < 1e-12:
        raise PreconditionViolated("the flow is parallel to the arc")
    if time_bound is None:
        time_bound = max(100.0, 50.0 * S.float_area / (arc.length * transverse))
    cuts = {0.0}
    for s in S.singularities:
        for p, v in tracer.corners_for(s.index, back):
            hit = first_hit(tracer, None, back, arc, time_bound, at_vertex=(p, v), min_time=1e-12)
            if hit is not None:
                cuts.add(hit[1])
    end = arc.point_at(arc.length)
    for pt in (arc.start, end):
        hit = _first_hit_from_point(tracer, pt, back, arc, time_bound)
        if hit is not None:
            cuts.add(hit[1])
    ordered = []
    for c in sorted(cuts):
        if c >= arc.length - 1e-12:
            continue
        if ordered and c - ordered[-1] < 1e-12:
            continue
        ordered.append(c)
    bounds = ordered + [arc.length]
    starts, lengths, trans, times = [], [], [], []
    for a, b in zip(bounds, bounds[1:]):
        mid = (a + b) / 2
        hit = first_hit(tracer, arc.point_at(mid), u, arc, time_bound)
        if hit is None:
            raise IncompleteSection("orbit from the section did not return", r=mid, bound=time_bound)
        starts.append(a)
        lengths.append(b - a)
        trans.append(hit[1] - mid)
        times.append(hit[0])
    iet = IET(starts, lengths, trans, times, arc.length)
    _check_section(tracer, arc, u, iet, time_bound, samples)
    return iet


def _first_hit_from_point(tracer, pt, u, arc, bound):
    for v, (vx, vy) in enumerate(tracer.verts[pt.poly]):
        if abs(vx - pt.x) < 1e-12 and abs(vy - pt.y) < 1e-12:
            # cone points are handled as separatrix sources already
            return None
    return first_hit(tracer, pt, u, arc, bound, min_time=1e-12)


def _check_section(tracer, arc, u, iet, bound, samples):
    for k in range(samples):
        r = (k + 0.5) * arc.length / samples
        hit = first_hit(tracer, arc.point_at(r), u, arc, bound)
        if hit is None:
            raise IncompleteSection("sampled orbit did not return within the bound", r=r, bound=bound)
        i = iet.index(r)
        if abs(hit[1] - (r + iet.translations[i])) > 1e-7 or abs(hit[0] - iet.return_times[i]) > 1e-7:
            raise IncompleteSection("return map is not an exchange of the computed intervals", r=r)


@dataclass
class AverageResult:
    crossings: int
    T: float
    average: float
    normalized: float
    hit: bool = False
    hit_time: float | None = None


def _crossing_times(tracer, x, u, arc, T):
    """Crossing times in ``[0, T)`` and the time the trajectory stopped."""
    times = []
    stopped = T
    try:
        for pc in tracer.trace(x, u, T):
            for tm, _ in arc.hits(pc):
                if tm < T - 1e-12 and (not times or tm - times[-1] > 1e-9):
                    times.append(tm)
    except HitSingularity as exc:
        stopped = exc.details["time"]
    return times, stopped


def _normalizer(S, arc, u) -> float:
    transverse = abs(u[0] * arc.direction[1] - u[1] * arc.direction[0])
    return S.float_area / transverse


def ergodic_average(
    S: TranslationSurface, x: SurfacePoint, I, T: float, direction=None, tracer: Tracer | None = None
) -> AverageResult:
    """Crossings of ``I`` by the trajectory of length ``T`` from ``x``, per unit time.

    ``normalized`` rescales by area over the transverse component of the flow,
    so it estimates ``|I|`` for a uniquely ergodic flow.  On hitting a cone
    point the average is taken up to the hitting time and ``hit`` is set.
    """
    if not T > 0:
        raise PreconditionViolated("T must be positive")
    tracer = tracer or Tracer(S)
    arc = _as_arc(S, I, tracer)
    u = unit(direction or VERTICAL)
    times, stopped = _crossing_times(tracer, SurfacePoint(*x), u, arc, T)
    hit = stopped < T
    span = stopped if hit else T
    avg = len(times) / span if span > 0 else 0.0
    return AverageResult(len(times), span, avg, avg * _normalizer(S, arc, u), hit, stopped if hit else None)


@dataclass
class ErgodicRow:
    start: int
    T: float
    crossings: int
    average: float
    normalized: float
    hit: bool


@dataclass
class ErgodicReport:
    rows: list[ErgodicRow]
    horizons: list[float]
    deviations: list[float] = field(default_factory=list)  # per horizon, over valid starts
    insufficient: bool = False

    @property
    def max_deviation(self) -> float:
        return self.deviations[0] if self.deviations else math.nan

    def persistent(self, threshold: float = 0.1) -> bool:
        """Deviation above ``threshold`` at every horizon."""
        return bool(self.deviations) and all(d > threshold for d in self.deviations)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["start", "T", "crossings", "average", "normalized", "hit"])
        for r in self.rows:
            w.writerow([r.start, f"{r.T:.12g}", r.crossings, f"{r.average:.12g}", f"{r.normalized:.12g}", int(r.hit)])
        for T, d in zip(self.horizons, self.deviations):
            w.writerow(["max_deviation", f"{T:.12g}", "", f"{d:.12g}", "", ""])
        return buf.getvalue()


def unique_ergodicity_probe(
    S: TranslationSurface,
    I,
    starts,
    T: float,
    direction=None,
    horizons=(1,),
    tracer: Tracer | None = None,
) -> ErgodicReport:
    """Averages from several starts at horizons ``T*h`` and their pairwise spread.

    Each trajectory is traced once to the longest horizon.  Starts that hit a
    cone point before a horizon are excluded from that horizon's spread.
    """
    starts = [SurfacePoint(*s) for s in starts]
    if len(starts) < 2:
        raise PreconditionViolated("need at least two start points")
    tracer = tracer or Tracer(S)
    arc = _as_arc(S, I, tracer)
    u = unit(direction or VERTICAL)
    norm = _normalizer(S, arc, u)
    Ts = [T * h for h in horizons]
    Tmax = max(Ts)
    rows = []
    per_horizon = {Th: [] for Th in Ts}
    for k, x in enumerate(starts):
        times, stopped = _crossing_times(tracer, x, u, arc, Tmax)
        for Th in Ts:
            hit = stopped < Th
            span = stopped if hit else Th
            n = sum(1 for tm in times if tm < span - 1e-12)
            avg = n / span if span > 0 else 0.0
            rows.append(ErgodicRow(k, span, n, avg, avg * norm, hit))
            if not hit:
                per_horizon[Th].append(avg * norm)
    devs = []
    insufficient = False
    for Th in Ts:
        vals = per_horizon[Th]
        if len(vals) < 2:
            insufficient = True
            devs.append(math.nan)
        else:
            devs.append(max(abs(a - b) for a, b in itertools.combinations(vals, 2)))
    return ErgodicReport(rows, Ts, devs, insufficient)


def segment_arc(S: TranslationSurface, start: SurfacePoint, direction, length: float, tracer=None) -> Arc:
    """Arc along an arbitrary direction (used for sections transverse to sloped flows)."""
    tracer = tracer or Tracer(S)
    return make_arc(tracer, SurfacePoint(*start), direction, length)
