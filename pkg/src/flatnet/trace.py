"""Straight-line trajectories on a polygon surface.

Points are ``(polygon, x, y)`` in the polygon's own (unscaled) float
coordinates.  Times and lengths passed to and returned from this module are
surface lengths, i.e. polygon lengths multiplied by ``S.scale``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import HitSingularity, PreconditionViolated
from .surface import TranslationSurface

TOL = 1e-11


class SurfacePoint(NamedTuple):
    poly: int
    x: float
    y: float


class Piece(NamedTuple):
    poly: int
    ax: float
    ay: float
    bx: float
    by: float
    t0: float
    t1: float


def unit(direction) -> tuple[float, float]:
    if hasattr(direction, "to_float"):
        direction = direction.to_float()
    dx, dy = float(direction[0]), float(direction[1])
    n = math.hypot(dx, dy)
    if n == 0:
        raise PreconditionViolated("zero direction")
    return dx / n, dy / n


class Tracer:
    """Precomputed float geometry of a surface for fast trajectory tracing."""

    def __init__(self, S: TranslationSurface):
        self.S = S
        self.scale = S.scale
        self.verts = [[v.to_float() for v in poly] for poly in S.polygons]
        self.evec = []
        for poly in S.polygons:
            n = len(poly)
            self.evec.append([(poly[(i + 1) % n] - poly[i]).to_float() for i in range(n)])
        self.shift = {}
        for (p, e) in S.gluings:
            self.shift[(p, e)] = S.translation(p, e).to_float()
        self.order = {c: S.singularities[s].order for c, s in S.vertex_class.items()}
        self.size = max(max(abs(c) for v in vs for c in v) for vs in self.verts) or 1.0

    # corners
    def corner_contains(self, p: int, v: int, u) -> bool:
        """Whether direction ``u`` leaves vertex ``v`` of polygon ``p`` into the polygon.

        The sector includes its first ray (along the outgoing edge) only.
        """
        n = len(self.verts[p])
        ox, oy = self.evec[p][v]
        ix, iy = self.evec[p][(v - 1) % n]
        ix, iy = -ix, -iy
        ux, uy = u
        c1 = ox * uy - oy * ux
        d1 = ox * ux + oy * uy
        c2 = ux * iy - uy * ix
        turn = ox * iy - oy * ix
        eps = 1e-13
        on_first = abs(c1) <= eps * math.hypot(ox, oy) and d1 > 0
        if on_first:
            return True
        if turn > 0:  # convex corner
            return c1 > eps and c2 > eps
        # reflex (or straight) corner: complement of the convex wedge from in to out
        return not (c1 <= eps and c2 <= eps) and not (abs(c2) <= eps and ux * ix + uy * iy > 0)

    def corner_for(self, sing: int, u) -> tuple[int, int]:
        for p, v in self.S.singularities[sing].corners:
            if self.corner_contains(p, v, u):
                return p, v
        raise PreconditionViolated(f"no corner of singularity {sing} contains direction {u}")

    def corners_for(self, sing: int, u) -> list[tuple[int, int]]:
        """All corners of ``sing`` whose sector contains ``u`` (one per prong)."""
        return [(p, v) for p, v in self.S.singularities[sing].corners if self.corner_contains(p, v, u)]

    # tracing
    def _exit(self, p: int, x: float, y: float, ux: float, uy: float, skip_start: bool):
        verts, evec = self.verts[p], self.evec[p]
        best = None
        for i, (ex, ey) in enumerate(evec):
            den = ux * ey - uy * ex  # cross(u, E)
            if den <= 0:
                # cross(E, u) >= 0: edge does not face the direction of motion
                continue
            vx, vy = verts[i]
            wx, wy = vx - x, vy - y
            s = (wx * ey - wy * ex) / den
            if s < (TOL * self.size if skip_start else -TOL * self.size):
                continue
            r = (wx * uy - wy * ux) / den
            if r < -1e-12 or r > 1 + 1e-12:
                continue
            if best is None or s < best[0]:
                best = (s, i, r)
        return best

    def trace(self, start: SurfacePoint, u, T: float, stop_at_marked: bool = False, at_vertex=None):
        """Yield pieces of the trajectory of length ``T`` from ``start`` in direction ``u``.

        ``at_vertex=(p, v)`` starts at a polygon vertex in that corner.  Hitting
        a cone point raises :class:`HitSingularity` with the hitting time; a
        trajectory ending exactly at a vertex finishes normally.
        """
        ux, uy = u
        if at_vertex is not None:
            p, v = at_vertex
            x, y = self.verts[p][v]
        else:
            p, x, y = start
        Tp = T / self.scale
        done = 0.0
        skip = at_vertex is not None
        while True:
            ex = self._exit(p, x, y, ux, uy, skip)
            if ex is None:
                raise PreconditionViolated(f"trajectory lost in polygon {p} at ({x}, {y})")
            s, i, r = ex
            elen = math.hypot(*self.evec[p][i])
            if done + s >= Tp - TOL * self.size:
                s = max(0.0, Tp - done)
                yield Piece(p, x, y, x + s * ux, y + s * uy, done * self.scale, Tp * self.scale)
                return
            nx, ny = x + s * ux, y + s * uy
            yield Piece(p, x, y, nx, ny, done * self.scale, (done + s) * self.scale)
            done += s
            near_start = r * elen < 1e-10 * self.size
            near_end = (1 - r) * elen < 1e-10 * self.size
            if near_start or near_end:
                n = len(self.verts[p])
                vert = i if near_start else (i + 1) % n
                sing = self.S.vertex_class[(p, vert)]
                if stop_at_marked or self.S.singularities[sing].order > 1:
                    raise HitSingularity(
                        f"trajectory hit singularity {sing} at time {done * self.scale}",
                        time=done * self.scale,
                        singularity=sing,
                    )
                p, vv = self.corner_for(sing, (ux, uy))
                x, y = self.verts[p][vv]
                skip = True
                continue
            q, f = self.S.gluings[(p, i)]
            sx, sy = self.shift[(p, i)]
            p, x, y = q, nx + sx, ny + sy
            skip = True

    def endpoint(self, start: SurfacePoint, u, T: float, **kw) -> SurfacePoint:
        last = None
        for last in self.trace(start, u, T, **kw):
            pass
        return SurfacePoint(last.poly, last.bx, last.by)


@dataclass
class Arc:
    """A segment on the surface, stored as per-polygon pieces.

    ``pieces`` holds ``(poly, ax, ay, bx, by, r0, r1)`` with ``r`` the
    surface-length parameter along the arc.  Membership is half-open:
    ``0 <= r < length``.
    """

    pieces: list
    length: float
    direction: tuple[float, float]
    start: SurfacePoint

    def __post_init__(self):
        self.by_poly = {}
        for pc in self.pieces:
            self.by_poly.setdefault(pc[0], []).append(pc)

    def point_at(self, r: float) -> SurfacePoint:
        for poly, ax, ay, bx, by, r0, r1 in self.pieces:
            if r0 - 1e-15 <= r <= r1 + 1e-15:
                s = 0.0 if r1 == r0 else (r - r0) / (r1 - r0)
                return SurfacePoint(poly, ax + s * (bx - ax), ay + s * (by - ay))
        raise PreconditionViolated(f"parameter {r} outside arc of length {self.length}")

    def hits(self, piece: Piece, closed: bool = False):
        """Crossings of a trajectory piece with the arc: list of ``(time, r)``."""
        out = []
        cand = self.by_poly.get(piece.poly)
        if not cand:
            return out
        px, py = piece.ax, piece.ay
        dx, dy = piece.bx - px, piece.by - py
        for _, cx, cy, ex, ey, r0, r1 in cand:
            fx, fy = ex - cx, ey - cy
            den = dx * fy - dy * fx
            if den == 0:
                continue
            wx, wy = cx - px, cy - py
            s = (wx * fy - wy * fx) / den
            rr = (wx * dy - wy * dx) / den
            if s < -1e-12 or s > 1 + 1e-12 or rr < -1e-12 or rr > 1 + 1e-12:
                continue
            r = r0 + min(1.0, max(0.0, rr)) * (r1 - r0)
            if closed:
                ok = -1e-12 <= r <= self.length + 1e-12
            else:
                ok = -1e-12 <= r < self.length - 1e-12
            if ok:
                s = min(1.0, max(0.0, s))
                out.append((piece.t0 + s * (piece.t1 - piece.t0), r))
        out.sort()
        return out


def make_arc(tracer: Tracer, start: SurfacePoint, direction, length: float, at_vertex=None) -> Arc:
    """Trace a segment of surface length ``length`` and record it as an :class:`Arc`."""
    u = unit(direction)
    pieces = []
    for pc in tracer.trace(start, u, length, at_vertex=at_vertex):
        pieces.append((pc.poly, pc.ax, pc.ay, pc.bx, pc.by, pc.t0, pc.t1))
    if at_vertex is not None:
        p, v = at_vertex
        start = SurfacePoint(p, *tracer.verts[p][v])
    return Arc(pieces, length, u, start)


def horizontal_arc(S: TranslationSurface, start: SurfacePoint, length: float, tracer: Tracer | None = None) -> Arc:
    """Horizontal arc (direction ``(1, 0)`` in the polygon chart)."""
    tracer = tracer or Tracer(S)
    vertex = _vertex_at(tracer, start, (1.0, 0.0))
    return make_arc(tracer, start, (1.0, 0.0), length, at_vertex=vertex)


def _vertex_at(tracer: Tracer, pt: SurfacePoint, u):
    """If ``pt`` is a polygon vertex, the corner of its class containing ``u``."""
    for v, (vx, vy) in enumerate(tracer.verts[pt.poly]):
        if abs(vx - pt.x) < 1e-12 and abs(vy - pt.y) < 1e-12:
            sing = tracer.S.vertex_class[(pt.poly, v)]
            return tracer.corner_for(sing, u)
    return None


def first_hit(tracer: Tracer, start: SurfacePoint, u, arc: Arc, T: float, at_vertex=None, min_time: float = 1e-9):
    """Earliest ``(time, r)`` at which the trajectory meets ``arc``, or ``None``.

    Stops early at a cone point (returns ``None``); raises nothing.
    """
    try:
        for pc in tracer.trace(start, u, T, at_vertex=at_vertex):
            for tm, r in arc.hits(pc):
                if tm > min_time:
                    return tm, r
    except HitSingularity:
        return None
    return None


def separatrix_starts(tracer: Tracer, u, include_marked: bool = True):
    """Corners from which a leaf in direction ``u`` leaves a vertex (one per prong)."""
    out = []
    for s in tracer.S.singularities:
        if s.order == 1 and not include_marked:
            continue
        for p, v in s.corners:
            if tracer.corner_contains(p, v, u):
                out.append((s.index, p, v))
    return out
