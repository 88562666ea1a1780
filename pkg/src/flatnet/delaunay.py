"""Delaunay triangulations, rectangle visibility and networks of squares.

Chart coordinates: every Delaunay triangle carries a chart, the developing
map of its immersed circumdisk, with origin at the triangle's vertex 0 and
polygon units.  Boxes that fit in the closed circumdisk are immersed
rectangles free of cone points, so visibility between objects in a common
chart is plain planar geometry.  Anything else is checked by tracing on the
surface.
"""

from __future__ import annotations

import json
import math
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    EdgeTooLong,
    HitSingularity,
    NetworkDisconnected,
    PreconditionViolated,
    RadiusTooSmall,
)
from .mesh import Mesh
from .surface import SaddleConnection, TranslationSurface, canonical_holonomy
from .trace import Arc, SurfacePoint, Tracer, _vertex_at, make_arc, unit

UP = (0.0, 1.0)
RIGHT = (1.0, 0.0)


def _move(tracer: Tracer, pt: SurfacePoint, u, length: float) -> SurfacePoint:
    if length <= 0:
        return pt
    return tracer.endpoint(pt, u, length, at_vertex=_vertex_at(tracer, pt, u))


def _horizontal(tracer: Tracer, pt: SurfacePoint, length: float, right=RIGHT) -> Arc:
    return make_arc(tracer, pt, right, length, at_vertex=_vertex_at(tracer, pt, right))


def _right_of(up):
    return (up[1], -up[0])


@dataclass
class RectangleImm:
    """Immersed rectangle with horizontal and vertical sides.

    ``anchor`` is the lower-left corner; ``width`` and ``height`` are surface
    lengths.  The immersion goes right along the bottom side, then up.  For
    flows in a direction other than vertical, ``up`` is the unit flow
    direction and "right" is ``up`` turned clockwise.
    """

    anchor: SurfacePoint
    width: float
    height: float
    bottom: Arc = field(repr=False)
    side_exact: Fraction | None = None
    embedded: bool = False
    label: str = ""
    frame: tuple | None = None  # (triangle, x0, y0): lower-left corner in that chart
    up: tuple[float, float] = UP

    @property
    def path(self):
        return self.bottom.pieces

    @property
    def is_square(self) -> bool:
        return abs(self.width - self.height) <= 1e-12 * max(self.width, 1.0)

    def exact_measure(self) -> Fraction:
        """Exact area ``side**2`` of an embedded square."""
        if self.side_exact is None or not self.embedded:
            raise PreconditionViolated("exact measure needs an embedded square with an exact side")
        return self.side_exact * self.side_exact

    def multiplicity(self, tracer: Tracer, z: SurfacePoint) -> int:
        """Number of points of the rectangle mapping to the surface point ``z``."""
        times = []
        try:
            for pc in tracer.trace(z, (-self.up[0], -self.up[1]), self.height):
                for tm, _ in self.bottom.hits(pc, closed=True):
                    if not times or tm - times[-1] > 1e-9:
                        times.append(tm)
        except HitSingularity:
            pass
        return len(times)

    def measure(self, tracer: Tracer, samples: int = 12) -> float:
        """Lebesgue measure of the image: exact for embedded rectangles, sampled otherwise."""
        if self.embedded:
            return float(self.exact_measure()) if self.side_exact is not None else self.width * self.height
        total = 0.0
        for i in range(samples):
            r = (i + 0.5) * self.width / samples
            base = self.bottom.point_at(r)
            for j in range(samples):
                z = _move(tracer, base, self.up, (j + 0.5) * self.height / samples)
                total += 1.0 / max(1, self.multiplicity(tracer, z))
        return self.width * self.height * total / (samples * samples)

    def sample_points(self, tracer: Tracer, n: int = 3, inset: float | None = None):
        """An ``n`` by ``n`` grid of points of the rectangle, corners slightly inset."""
        if inset is None:
            inset = 1e-7 * min(self.width, self.height)
        out = []
        for i in range(n):
            a = inset + (self.width - 2 * inset) * i / (n - 1)
            base = self.bottom.point_at(a)
            for j in range(n):
                b = inset + (self.height - 2 * inset) * j / (n - 1)
                out.append(_move(tracer, base, self.up, b))
        return out


def make_rectangle(
    S: TranslationSurface,
    anchor: SurfacePoint,
    width: float,
    height: float,
    tracer: Tracer | None = None,
    check: bool = True,
    up=UP,
    **kw,
) -> RectangleImm:
    """Immerse a rectangle at ``anchor``; with ``check`` reject cone points inside."""
    if not (width > 0 and height > 0):
        raise PreconditionViolated("rectangle sides must be positive")
    tracer = tracer or Tracer(S)
    anchor = SurfacePoint(*anchor)
    up = unit(up)
    bottom = _horizontal(tracer, anchor, width, _right_of(up))
    R = RectangleImm(anchor, width, height, bottom, up=up, **kw)
    if check and _cone_point_inside(tracer, R):
        raise PreconditionViolated("rectangle contains a cone point", width=width, height=height)
    return R


def _cone_point_inside(tracer: Tracer, R: RectangleImm) -> bool:
    S = tracer.S
    for s in S.singularities:
        if s.order == 1:
            continue
        down = (-R.up[0], -R.up[1])
        for p, v in tracer.corners_for(s.index, down):
            try:
                for pc in tracer.trace(None, down, R.height, at_vertex=(p, v)):
                    for tm, r in R.bottom.hits(pc, closed=True):
                        if 1e-12 < tm < R.height - 1e-12 and 1e-12 < r < R.width - 1e-12:
                            return True
            except HitSingularity:
                pass
    return False


def vertical_distance(
    S: TranslationSurface, x: SurfacePoint, R: RectangleImm, cutoff: float, tracer: Tracer | None = None
) -> float:
    """Shortest vertical segment from ``x`` to the closed rectangle ``R``, or ``inf`` past ``cutoff``."""
    if not cutoff > 0:
        raise PreconditionViolated("cutoff must be positive")
    tracer = tracer or Tracer(S)
    x = SurfacePoint(*x)
    best = math.inf
    hit = None
    # downward: reaching the bottom side at time s means x - s lies on it,
    # so points of R are met from time s - height on
    try:
        for pc in tracer.trace(x, (-R.up[0], -R.up[1]), cutoff + R.height):
            for tm, _ in R.bottom.hits(pc, closed=True):
                best = min(best, max(0.0, tm - R.height))
            if best < math.inf:
                break
    except HitSingularity as exc:
        hit = exc
    if best > 0:
        try:
            for pc in tracer.trace(x, R.up, min(cutoff, best)):
                found = R.bottom.hits(pc, closed=True)
                if found:
                    best = min(best, found[0][0])
                    break
        except HitSingularity as exc:
            hit = hit or exc
    if best <= cutoff + 1e-12:
        return best
    if hit is not None:
        raise HitSingularity(str(hit), **hit.details)
    return math.inf


def are_k_reachable(S, x, y, K: float, candidates, tracer: Tracer | None = None) -> RectangleImm | None:
    """First candidate rectangle from which both ``x`` and ``y`` are ``K``-visible."""
    if K < 0:
        raise PreconditionViolated("K must be non-negative")
    tracer = tracer or Tracer(S)
    for R in candidates:
        cutoff = max(K * R.height, 1e-300)
        try:
            if vertical_distance(S, x, R, cutoff, tracer) <= K * R.height + 1e-12 and vertical_distance(
                S, y, R, cutoff, tracer
            ) <= K * R.height + 1e-12:
                return R
        except HitSingularity:
            continue
    return None


# ---------------------------------------------------------------------------
# Delaunay triangulation


@dataclass
class DelaunayTriangle:
    index: int
    vertices: tuple[int, int, int]
    edges: tuple  # exact holonomies of the three sides, ccw
    center_offset: tuple[float, float]  # circumcenter in the chart (polygon units)
    radius: float  # surface length
    circumcenter: SurfacePoint

    @property
    def area(self) -> float:
        (ax, ay), (bx, by) = self.edges[0].to_float(), self.edges[1].to_float()
        return abs(ax * by - ay * bx) / 2


@dataclass
class DelaunayTriangulation:
    surface: TranslationSurface
    mesh: Mesh
    tracer: Tracer
    triangles: list[DelaunayTriangle]
    edges: list[SaddleConnection]
    edge_slots: list[tuple[int, int]]
    flips: int
    cocircular: int

    @property
    def nu(self) -> int:
        return len(self.triangles) // 2

    def shortest_edge(self) -> float:
        return min(e.length for e in self.edges)

    def empty_disk_violations(self, margin: float = 1e-9) -> int:
        return sum(len(self.mesh.vertices_in_disk(t, margin)) for t in range(len(self.triangles)))

    def vertex_position(self, t: int, k: int) -> tuple[float, float]:
        e = [v.to_float() for v in self.mesh.edges[t]]
        return [(0.0, 0.0), e[0], (e[0][0] + e[1][0], e[0][1] + e[1][1])][k]

    def locate(self, t: int, offset) -> SurfacePoint:
        return self.mesh.locate(t, offset)

    def to_chart(self, t: int, t2: int, j: int, point) -> tuple[float, float]:
        """Map a chart-``t2`` point to chart ``t`` through their shared edge ``(t2, j)``."""
        k2 = (j + 1) % 3
        q = self.vertex_position(t2, j)
        # find the partner slot in t
        tt, k = self.mesh.adj[t2][j]
        if tt != t:
            raise PreconditionViolated("triangles do not share that edge")
        p = self.vertex_position(t, (k + 1) % 3)
        del k2
        return p[0] + point[0] - q[0], p[1] + point[1] - q[1]


def delaunay_triangulation(S: TranslationSurface, tracer: Tracer | None = None) -> DelaunayTriangulation:
    """Delaunay triangulation of ``S`` by Lawson flips from an ear-clipped triangulation.

    Cocircular configurations are counted, not fatal: the flip test only flips
    strictly non-Delaunay edges.
    """
    tracer = tracer or Tracer(S)
    mesh = Mesh.from_surface(S)
    mesh.attach(tracer)
    mesh.set_time(0.0)
    flips = mesh.make_delaunay()
    tris = []
    for t in range(mesh.num_triangles):
        (cx, cy), rho = mesh.circumcenter(t)
        off = (cx / S.scale, cy / S.scale)
        tris.append(
            DelaunayTriangle(t, tuple(mesh.verts[t]), tuple(mesh.edges[t]), off, rho, mesh.locate(t, off))
        )
    edges, slots = [], []
    cocircular = 0
    for t, k in mesh.edge_list():
        hol, flipped = canonical_holonomy(mesh.edges[t][k])
        a, b = mesh.verts[t][k], mesh.verts[t][(k + 1) % 3]
        if flipped:
            a, b = b, a
        edges.append(SaddleConnection(hol, a, b, ((t, k),), S.scale))
        slots.append((t, k))
        if abs(mesh._incircle(t, k)) <= 1e-12:
            cocircular += 1
    return DelaunayTriangulation(S, mesh, tracer, tris, edges, slots, flips, cocircular)


# ---------------------------------------------------------------------------
# squares


def _exact(delta) -> Fraction:
    return delta if isinstance(delta, Fraction) else Fraction(str(delta))


def _chart_square(dt: DelaunayTriangulation, t: int, lower_left, side: Fraction, label: str, embedded: bool):
    S = dt.surface
    anchor = dt.locate(t, lower_left)
    R = make_rectangle(
        S,
        anchor,
        float(side),
        float(side),
        dt.tracer,
        check=not embedded,
        side_exact=side,
        embedded=embedded,
        label=label,
        frame=(t, lower_left[0], lower_left[1]),
    )
    return R


def central_square(dt: DelaunayTriangulation, t: int, delta, embedded: bool | None = None) -> RectangleImm:
    """Square of side ``delta`` centred at the circumcenter of triangle ``t``."""
    side = _exact(delta)
    tri = dt.triangles[t]
    if tri.radius < float(side):
        raise RadiusTooSmall(f"circumradius {tri.radius} < {float(side)}", triangle=t, radius=tri.radius)
    if embedded is None:
        embedded = dt.shortest_edge() > 2 * float(side)
    h = float(side) / 2 / dt.surface.scale
    cx, cy = tri.center_offset
    return _chart_square(dt, t, (cx - h, cy - h), side, f"central:{t}", embedded)


def _corner_for_side(ex: float, ey: float, third: float, sign: int):
    """Corner offset (of the 3x3 split) disjoint from the edge line on side ``sign``."""
    n = math.hypot(ex, ey)
    ux, uy = ex / n, ey / n
    reach = third / 2 * (abs(ux) + abs(uy))
    best = None
    for sx in (-1, 1):
        for sy in (-1, 1):
            d = ux * sy * third - uy * sx * third  # cross(u, c)
            if abs(d) <= reach + 1e-12 * third or (d > 0) != (sign > 0):
                continue
            key = (-abs(d), sx, sy)
            if best is None or key < best[0]:
                best = (key, (sx * third, sy * third))
    return best[1]


def edge_corner_squares(
    dt: DelaunayTriangulation,
    slot: tuple[int, int],
    delta,
    max_edge: float | None = None,
    embedded: bool | None = None,
):
    """The two corner squares of side ``delta/3`` next to the midpoint of a Delaunay edge.

    Returns ``(A1, A2)`` where ``A1`` lies on the side of the circumcenter
    of the triangle owning ``slot`` and ``A2`` on the side of the other
    circumcenter; they coincide when both circumcenters are on one side.
    """
    side = _exact(delta)
    S = dt.surface
    t, k = slot
    t2, j = dt.mesh.adj[t][k]
    ex, ey = dt.mesh.edges[t][k].to_float()
    length = math.hypot(ex, ey) * S.scale
    if max_edge is not None and length > max_edge:
        raise EdgeTooLong(f"edge of length {length} exceeds {max_edge}", length=length, bound=max_edge)
    for tri in (t, t2):
        if dt.triangles[tri].radius < float(side):
            raise RadiusTooSmall("circumradius below delta", triangle=tri, radius=dt.triangles[tri].radius)
    if embedded is None:
        embedded = dt.shortest_edge() > 2 * float(side)
    third = float(side) / 3 / S.scale
    px, py = dt.vertex_position(t, k)
    mx, my = px + ex / 2, py + ey / 2

    def side_of(center):
        s = ex * (center[1] - py) - ey * (center[0] - px)
        if abs(s) <= 1e-12 * (ex * ex + ey * ey):
            return 0
        return 1 if s > 0 else -1

    s1 = side_of(dt.triangles[t].center_offset) or 1
    c2 = dt.to_chart(t, t2, j, dt.triangles[t2].center_offset)
    s2 = side_of(c2) or -1
    off1 = _corner_for_side(ex, ey, third, s1)
    off2 = _corner_for_side(ex, ey, third, s2)
    ll1 = (mx + off1[0] - third / 2, my + off1[1] - third / 2)
    A1 = _chart_square(dt, t, ll1, side / 3, f"corner:{t}.{k}:a", embedded)
    if off2 == off1:
        return A1, A1
    # the second square is in the other triangle's circumdisk; place it in that chart
    qx, qy = dt.vertex_position(t2, (j + 1) % 3)  # same surface point as (px, py)
    ll2 = (qx + (mx - px) + off2[0] - third / 2, qy + (my - py) + off2[1] - third / 2)
    A2 = _chart_square(dt, t2, ll2, side / 3, f"corner:{t}.{k}:b", embedded)
    return A1, A2


# ---------------------------------------------------------------------------
# reachability inside charts


def _box_in_disk(box, center, radius) -> bool:
    x0, y0, x1, y1 = box
    r2 = radius * radius * (1 + 1e-12)
    return all((x - center[0]) ** 2 + (y - center[1]) ** 2 <= r2 for x in (x0, x1) for y in (y0, y1))


def _bands(box_a, box_b, K: float = 1.0):
    """Candidate witness boxes for two boxes (chart coordinates), most compact first.

    A box ``[X0, X1] x [lo, lo + h]`` spanning both horizontally sees every
    point whose height is within ``K*h`` of ``[lo, lo + h]``.
    """
    X0 = min(box_a[0], box_b[0])
    X1 = max(box_a[2], box_b[2])
    Y0 = min(box_a[1], box_b[1])
    Y1 = max(box_a[3], box_b[3])
    H = Y1 - Y0
    if H <= 0:
        H = 1e-9 * max(1.0, X1 - X0)
    out = []
    for frac in (1 / (1 + 2 * K), 0.5, 2 / 3, 1.0) if K > 0 else (1.0,):
        h = max(H * frac, H / (1 + 2 * K)) if K > 0 else H
        lo_min, lo_max = Y1 - (1 + K) * h, Y0 + K * h
        if lo_max < lo_min - 1e-15:
            continue
        for i in range(5):
            lo = lo_min + (lo_max - lo_min) * i / 4
            out.append((X0, lo, X1, lo + h))
    return out


@dataclass
class Witness:
    box: tuple[float, float, float, float]
    chart: int
    planar: bool


def _point_box(p, eps):
    return (p[0] - eps, p[1] - eps, p[0] + eps, p[1] + eps)


class NetworkBuilder:
    def __init__(self, dt: DelaunayTriangulation, K: float = 1.0):
        self.dt = dt
        self.K = K
        self.tracer = dt.tracer
        self.S = dt.surface

    def chart_box(self, R: RectangleImm, t: int):
        """Box of ``R`` in chart ``t`` (``None`` if ``R`` is not placed there)."""
        ft, x0, y0 = R.frame
        w = R.width / self.S.scale
        h = R.height / self.S.scale
        if ft == t:
            return (x0, y0, x0 + w, y0 + h)
        return None

    def planar_witness(self, t: int, box_a, box_b) -> Witness | None:
        tri = self.dt.triangles[t]
        rho = tri.radius / self.S.scale
        for cand in _bands(box_a, box_b, self.K):
            if cand[2] - cand[0] <= 0:
                continue
            if _box_in_disk(cand, tri.center_offset, rho):
                return Witness(cand, t, True)
        return None

    def traced_witness(self, t: int, box_a, box_b, points) -> Witness | None:
        """Build candidate rectangles on the surface and check visibility of ``points``."""
        sc = self.S.scale
        for cand in _bands(box_a, box_b, self.K):
            w, h = (cand[2] - cand[0]) * sc, (cand[3] - cand[1]) * sc
            if w <= 0:
                continue
            try:
                R = make_rectangle(self.S, self.dt.locate(t, (cand[0], cand[1])), w, h, self.tracer)
            except (HitSingularity, PreconditionViolated):
                continue
            ok = True
            for z in points:
                try:
                    d = vertical_distance(self.S, z, R, self.K * h + 1e-9, self.tracer)
                except HitSingularity:
                    ok = False
                    break
                if d > self.K * h + 1e-9:
                    ok = False
                    break
            if ok:
                return Witness(cand, t, False)
        return None

    def witness(self, t: int, box_a, box_b, points_fn) -> Witness | None:
        w = self.planar_witness(t, box_a, box_b)
        if w is None:
            w = self.traced_witness(t, box_a, box_b, points_fn())
        return w


@dataclass
class NetworkGraph:
    squares: list[RectangleImm]
    adjacency: dict[int, set[int]]
    K: float
    delta: Fraction
    nu: int
    witnesses: dict[tuple[int, int], Witness] = field(default_factory=dict)
    coverage_samples: int = 0
    coverage_failures: int = 0
    components: list[list[int]] = field(default_factory=list)

    @property
    def connected(self) -> bool:
        return len(self.components) <= 1

    @property
    def fully_covered(self) -> bool:
        return self.coverage_failures == 0

    def min_measure(self) -> Fraction:
        return min(R.exact_measure() for R in self.squares)

    def report(self) -> dict:
        return {
            "K": self.K,
            "delta": str(self.delta),
            "nu_delaunay": self.nu,
            "square_count": len(self.squares),
            "square_bound": 8 * self.nu,
            "squares": [
                {
                    "id": i,
                    "label": R.label,
                    "polygon": R.anchor.poly,
                    "x": round(R.anchor.x, 12),
                    "y": round(R.anchor.y, 12),
                    "side": str(R.side_exact),
                    "measure": str(R.exact_measure()) if R.embedded else None,
                }
                for i, R in enumerate(self.squares)
            ],
            "adjacency": {str(i): sorted(v) for i, v in sorted(self.adjacency.items())},
            "connected": self.connected,
            "components": self.components,
            "coverage": {
                "samples": self.coverage_samples,
                "failures": self.coverage_failures,
                "fully_covered": self.fully_covered,
            },
        }

    def report_text(self) -> str:
        return json.dumps(self.report(), indent=2, sort_keys=True) + "\n"


def _components(n: int, adj: dict[int, set[int]]) -> list[list[int]]:
    seen = [False] * n
    comps = []
    for s in range(n):
        if seen[s]:
            continue
        comp, queue = [], deque([s])
        seen[s] = True
        while queue:
            a = queue.popleft()
            comp.append(a)
            for b in adj.get(a, ()):
                if not seen[b]:
                    seen[b] = True
                    queue.append(b)
        comps.append(sorted(comp))
    return comps


def build_one_network(
    S: TranslationSurface,
    delta,
    samples: int = 1000,
    seed: int = 0,
    max_edge: float | None = None,
    dt: DelaunayTriangulation | None = None,
    strict: bool = True,
) -> NetworkGraph:
    """Central squares plus edge corner squares, with reachability graph and coverage sample.

    Raises :class:`NetworkDisconnected` when ``strict`` and the graph is not
    connected.
    """
    side = _exact(delta)
    dt = dt or delaunay_triangulation(S)
    ell = dt.shortest_edge()
    if not ell > 2 * float(side):
        raise PreconditionViolated(
            f"every saddle connection must exceed 2*delta: systole {ell} <= {2 * float(side)}",
            systole=ell,
            delta=float(side),
        )
    builder = NetworkBuilder(dt, 1.0)
    squares: list[RectangleImm] = []
    central = []
    for t in range(len(dt.triangles)):
        central.append(len(squares))
        squares.append(central_square(dt, t, side, embedded=True))
    by_chart: dict[int, list[int]] = {t: [central[t]] for t in range(len(dt.triangles))}
    edge_pairs = []
    for slot in dt.edge_slots:
        A1, A2 = edge_corner_squares(dt, slot, side, max_edge=max_edge, embedded=True)
        i1 = len(squares)
        squares.append(A1)
        by_chart[A1.frame[0]].append(i1)
        if A2 is A1:
            continue
        i2 = len(squares)
        squares.append(A2)
        by_chart[A2.frame[0]].append(i2)
        edge_pairs.append((slot, i1, i2))
    adj: dict[int, set[int]] = {i: set() for i in range(len(squares))}
    graph = NetworkGraph(squares, adj, 1.0, side, dt.nu)
    tr = builder.tracer

    def link(a, b, w):
        if w is not None:
            adj[a].add(b)
            adj[b].add(a)
            graph.witnesses[(min(a, b), max(a, b))] = w

    for t, members in sorted(by_chart.items()):
        for x in range(len(members)):
            for y in range(x + 1, len(members)):
                a, b = members[x], members[y]
                ba, bb = builder.chart_box(squares[a], t), builder.chart_box(squares[b], t)
                pts = lambda a=a, b=b: squares[a].sample_points(tr) + squares[b].sample_points(tr)
                link(a, b, builder.witness(t, ba, bb, pts))
    for (t, k), i1, i2 in edge_pairs:
        # both corner squares sit in the delta-square around the edge midpoint;
        # express the second in the first one's chart
        A1, A2 = squares[i1], squares[i2]
        t2, j = dt.mesh.adj[t][k]
        _, x2, y2 = A2.frame
        x2, y2 = dt.to_chart(t, t2, j, (x2, y2))
        ba = builder.chart_box(A1, t)
        bb = (x2, y2, x2 + A2.width / S.scale, y2 + A2.height / S.scale)
        pts = lambda A1=A1, A2=A2: A1.sample_points(tr) + A2.sample_points(tr)
        link(i1, i2, builder.traced_witness(t, ba, bb, pts()))
    graph.components = _components(len(squares), adj)
    _coverage(builder, dt, graph, by_chart, samples, seed)
    if strict and not graph.connected:
        raise NetworkDisconnected(
            "network graph is not connected", components=json.dumps(graph.components)
        )
    return graph


def _sample_in_triangle(rng: random.Random, a, b, c):
    u, v = rng.random(), rng.random()
    if u + v > 1:
        u, v = 1 - u, 1 - v
    return (a[0] + u * (b[0] - a[0]) + v * (c[0] - a[0]), a[1] + u * (b[1] - a[1]) + v * (c[1] - a[1]))


def _coverage(builder: NetworkBuilder, dt, graph: NetworkGraph, by_chart, samples: int, seed: int) -> None:
    """Sample uniform points and check each is 1-reachable from some square of its triangle's chart."""
    rng = random.Random(seed)
    areas = [tri.area for tri in dt.triangles]
    tr = builder.tracer
    eps = 1e-12
    failures = 0
    for _ in range(samples):
        t = rng.choices(range(len(areas)), weights=areas)[0]
        p = _sample_in_triangle(rng, *(dt.vertex_position(t, k) for k in range(3)))
        box_p = _point_box(p, eps)
        covered = False
        for idx in by_chart[t]:
            R = graph.squares[idx]
            box = builder.chart_box(R, t)
            pts = lambda R=R, t=t, p=p: R.sample_points(tr) + [dt.locate(t, p)]
            if builder.witness(t, box, box_p, pts) is not None:
                covered = True
                break
        failures += not covered
    graph.coverage_samples = samples
    graph.coverage_failures = failures


def disk_points_reachable(dt: DelaunayTriangulation, t: int, delta, n: int = 100, seed: int = 0) -> int:
    """Count of ``n`` sampled circumdisk points of triangle ``t`` not 1-reachable from its central square."""
    rng = random.Random(seed)
    A = central_square(dt, t, delta)
    builder = NetworkBuilder(dt, 1.0)
    tri = dt.triangles[t]
    rho = tri.radius / dt.surface.scale
    box = builder.chart_box(A, t)
    misses = 0
    for _ in range(n):
        r = rho * math.sqrt(rng.random()) * (1 - 1e-9)
        a = 2 * math.pi * rng.random()
        p = (tri.center_offset[0] + r * math.cos(a), tri.center_offset[1] + r * math.sin(a))
        pts = lambda p=p: A.sample_points(dt.tracer) + [dt.locate(t, p)]
        if builder.witness(t, box, _point_box(p, 1e-12), pts) is None:
            misses += 1
    return misses
