"""Triangulated view of a translation surface.

Edge vectors are exact; lengths and in-circle tests use a diagonal float
metric ``(fx, fy)`` so the same triangulation can be reused along a
Teichmueller geodesic.  Orientation tests never depend on the metric because
the flow has determinant one.
"""

from __future__ import annotations

import math

from .errors import BudgetExceeded, PreconditionViolated
from .quad import Vec2, cross, sign_of
from .surface import SaddleConnection, TranslationSurface, canonical_holonomy

DEFAULT_BUDGET = 2_000_000


def _inside_closed(p: Vec2, a: Vec2, b: Vec2, c: Vec2) -> bool:
    return (
        sign_of(cross(b - a, p - a)) >= 0
        and sign_of(cross(c - b, p - b)) >= 0
        and sign_of(cross(a - c, p - c)) >= 0
    )


def _ear_clip(poly: tuple[Vec2, ...]):
    """Yield triangles ``(i, j, k)`` of polygon vertex indices (ccw)."""
    chain = list(range(len(poly)))
    while len(chain) > 3:
        n = len(chain)
        for pos in range(n):
            i, j, k = chain[pos - 1], chain[pos], chain[(pos + 1) % n]
            a, b, c = poly[i], poly[j], poly[k]
            if sign_of(cross(b - a, c - b)) <= 0:
                continue
            if any(_inside_closed(poly[m], a, b, c) for m in chain if m not in (i, j, k)):
                continue
            yield i, j, k
            chain.pop(pos)
            break
        else:
            raise PreconditionViolated("polygon is not simple; ear clipping failed")
    yield tuple(chain)


class Mesh:
    """Triangles with exact edge vectors, gluing adjacency and vertex labels."""

    def __init__(self, edges, adj, verts, scale=1.0, origin=None):
        self.edges = edges
        self.adj = adj
        self.verts = verts
        self.scale = scale
        self.origin = origin  # (polygon, vertex) of each triangle's vertex 0
        self.flips = 0
        self.tracer = None
        self.anchors = None
        self.set_metric(scale, scale)

    def attach(self, tracer) -> None:
        """Locate every triangle on the surface and keep the locations through flips.

        Each triangle gets an interior reference point (its centroid, as a
        surface point) and the offset of that point from the triangle's
        vertex 0 in polygon coordinates.
        """
        if self.origin is None:
            raise PreconditionViolated("attach before flipping")
        from .trace import SurfacePoint

        self.tracer = tracer
        self.anchors = []
        for t, (p, i) in enumerate(self.origin):
            e0 = self.edges[t][0].to_float()
            e1 = self.edges[t][1].to_float()
            ox = (2 * e0[0] + e1[0]) / 3
            oy = (2 * e0[1] + e1[1]) / 3
            vx, vy = tracer.verts[p][i]
            self.anchors.append((SurfacePoint(p, vx + ox, vy + oy), (ox, oy)))

    def locate(self, t: int, offset) -> "object":
        """Surface point at polygon-coordinate ``offset`` from vertex 0 of triangle ``t``.

        The straight path from the triangle's reference point must avoid
        cone points, which holds inside the triangle's immersed circumdisk.
        """
        ref, (ox, oy) = self.anchors[t]
        dx, dy = offset[0] - ox, offset[1] - oy
        n = math.hypot(dx, dy)
        if n == 0:
            return ref
        return self.tracer.endpoint(ref, (dx / n, dy / n), n * self.scale)

    @classmethod
    def from_surface(cls, S: TranslationSurface) -> "Mesh":
        edges, verts, origin, labels = [], [], [], []
        diag = 0
        for p, poly in enumerate(S.polygons):
            n = len(poly)
            side = {(i, (i + 1) % n): ("poly", p, i) for i in range(n)}
            for i, j, k in _ear_clip(poly):
                t = len(edges)
                if (k, i) not in side:
                    side[(k, i)] = ("diag", diag, 0)
                    side[(i, k)] = ("diag", diag, 1)
                    diag += 1
                edges.append([poly[j] - poly[i], poly[k] - poly[j], poly[i] - poly[k]])
                verts.append([S.vertex_class[(p, i)], S.vertex_class[(p, j)], S.vertex_class[(p, k)]])
                origin.append((p, i))
                labels.append([side[(i, j)], side[(j, k)], side[(k, i)]])
        where = {}
        for t, labs in enumerate(labels):
            for k, lab in enumerate(labs):
                where[lab] = (t, k)
        adj = []
        for t, labs in enumerate(labels):
            row = []
            for lab in labs:
                if lab[0] == "poly":
                    q, f = S.gluings[(lab[1], lab[2])]
                    row.append(where[("poly", q, f)])
                else:
                    row.append(where[("diag", lab[1], 1 - lab[2])])
            adj.append(row)
        return cls(edges, adj, verts, S.scale, origin)

    def copy(self) -> "Mesh":
        m = Mesh(
            [list(e) for e in self.edges],
            [list(a) for a in self.adj],
            [list(v) for v in self.verts],
            self.scale,
            self.origin,
        )
        m.set_metric(self.fx, self.fy)
        m.flips = self.flips
        m.tracer = self.tracer
        m.anchors = list(self.anchors) if self.anchors is not None else None
        return m

    # metric
    def set_metric(self, fx: float, fy: float) -> None:
        self.fx, self.fy = fx, fy
        self.fvec = [[self._f(v) for v in tri] for tri in self.edges]

    def set_time(self, t: float) -> None:
        self.set_metric(self.scale * math.exp(t / 2), self.scale * math.exp(-t / 2))

    def _f(self, v: Vec2) -> tuple[float, float]:
        return self.fx * float(v.x), self.fy * float(v.y)

    def length(self, v: Vec2) -> float:
        x, y = self._f(v)
        return math.hypot(x, y)

    @property
    def num_triangles(self) -> int:
        return len(self.edges)

    def edge_list(self):
        """Each glued edge pair once, as ``(t, k)`` with ``(t, k) < partner``."""
        return [(t, k) for t in range(len(self.edges)) for k in range(3) if (t, k) < tuple(self.adj[t][k])]

    # geometry
    def circumcenter(self, t: int) -> tuple[tuple[float, float], float]:
        """Circumcenter (metric coordinates, relative to vertex 0) and radius."""
        bx, by = self.fvec[t][0]
        e1 = self.fvec[t][1]
        cx, cy = bx + e1[0], by + e1[1]
        d = 2 * (bx * cy - by * cx)
        b2, c2 = bx * bx + by * by, cx * cx + cy * cy
        ux = (cy * b2 - by * c2) / d
        uy = (bx * c2 - cx * b2) / d
        return (ux, uy), math.hypot(ux, uy)

    def _incircle(self, t: int, i: int) -> float:
        """Positive when the far vertex across edge ``(t, i)`` is inside the circumcircle."""
        e = self.fvec[t]
        p1 = e[i]
        p2 = (p1[0] + e[(i + 1) % 3][0], p1[1] + e[(i + 1) % 3][1])
        t2, j = self.adj[t][i]
        dx, dy = self.fvec[t2][(j + 1) % 3]
        ax, ay = -dx, -dy
        bx, by = p1[0] - dx, p1[1] - dy
        cx, cy = p2[0] - dx, p2[1] - dy
        det = (
            (ax * ax + ay * ay) * (bx * cy - by * cx)
            - (bx * bx + by * by) * (ax * cy - ay * cx)
            + (cx * cx + cy * cy) * (ax * by - ay * bx)
        )
        scale = max(abs(ax), abs(ay), abs(bx), abs(by), abs(cx), abs(cy)) ** 4
        return det / scale if scale else 0.0

    def flip(self, t: int, i: int) -> bool:
        """Flip edge ``i`` of triangle ``t`` if the quadrilateral is strictly convex."""
        t2, j = self.adj[t][i]
        E, F = self.edges[t], self.edges[t2]
        a, b = E[(i + 1) % 3], E[(i + 2) % 3]
        c, dd = F[(j + 1) % 3], F[(j + 2) % 3]
        # new diagonal from the apex of t (P2) to the apex of t2 (D): f = P2 -> D
        f = -(dd + a)
        # strict convexity: both new triangles positively oriented
        if sign_of(cross(dd, a)) <= 0 or sign_of(cross(b, c)) <= 0:
            return False
        old = {
            (t2, (j + 2) % 3): (t, 0),
            (t, (i + 1) % 3): (t, 1),
            (t, (i + 2) % 3): (t2, 0),
            (t2, (j + 1) % 3): (t2, 1),
        }
        partners = {slot: tuple(self.adj[slot[0]][slot[1]]) for slot in old}
        v0, v1, v2 = self.verts[t][i], self.verts[t][(i + 1) % 3], self.verts[t][(i + 2) % 3]
        vd = self.verts[t2][(j + 2) % 3]
        self.edges[t] = [dd, a, f]
        self.edges[t2] = [b, c, -f]
        self.verts[t] = [vd, v1, v2]
        self.verts[t2] = [v2, v0, vd]
        self.adj[t] = [None, None, (t2, 2)]
        self.adj[t2] = [None, None, (t, 2)]
        for slot, new in old.items():
            partner = partners[slot]
            partner_new = old.get(partner, partner)
            self.adj[new[0]][new[1]] = partner_new
            self.adj[partner_new[0]][partner_new[1]] = new
        self.fvec[t] = [self._f(v) for v in self.edges[t]]
        self.fvec[t2] = [self._f(v) for v in self.edges[t2]]
        if self.anchors is not None:
            self._move_anchors(t, t2, E, i, dd)
        self.origin = None
        self.flips += 1
        return True

    def _move_anchors(self, t, t2, E, i, dd):
        # old triangle t in its own coordinates: vertex k at Q[k]
        q1 = E[0].to_float()
        q2 = (E[0] + E[1]).to_float()
        Q = [(0.0, 0.0), q1, q2]
        qv0, qv1, qv2 = Q[i], Q[(i + 1) % 3], Q[(i + 2) % 3]
        ddf = dd.to_float()
        qd = (qv1[0] - ddf[0], qv1[1] - ddf[1])
        ref = self.anchors[t]
        new = []
        for apex, a, b in ((qd, qv1, qv2), (qv2, qv0, qd)):
            cx = (apex[0] + a[0] + b[0]) / 3
            cy = (apex[1] + a[1] + b[1]) / 3
            new.append(((cx, cy), (cx - apex[0], cy - apex[1])))
        pts = [self._walk(ref, pos) for pos, _ in new]
        self.anchors[t] = (pts[0], new[0][1])
        self.anchors[t2] = (pts[1], new[1][1])

    def _walk(self, ref, target):
        start, (ox, oy) = ref
        dx, dy = target[0] - ox, target[1] - oy
        n = math.hypot(dx, dy)
        if n == 0:
            return start
        return self.tracer.endpoint(start, (dx / n, dy / n), n * self.scale)

    def make_delaunay(self, max_flips: int = 100_000, tol: float = 1e-12) -> int:
        """Lawson flips until every edge is locally Delaunay; returns flip count."""
        done = 0
        stack = self.edge_list()
        while stack:
            t, i = stack.pop()
            if self._incircle(t, i) <= tol:
                continue
            t2, _ = self.adj[t][i]
            if not self.flip(t, i):
                continue
            done += 1
            if done > max_flips:
                raise BudgetExceeded(f"more than {max_flips} Delaunay flips")
            for tri in (t, t2):
                for k in range(3):
                    stack.append((tri, k))
        return done

    def is_delaunay(self, tol: float = 1e-9) -> bool:
        return all(self._incircle(t, i) <= tol for t, i in self.edge_list())

    def vertices_in_disk(self, t: int, margin: float = 1e-9, budget: int = 100_000) -> list:
        """Developed vertices strictly inside the circumdisk of triangle ``t``.

        Unfolds neighbouring triangles across every edge that meets the disk;
        an empty result is the empty-circumdisk property for ``t``.
        """
        (cx, cy), rho = self.circumcenter(t)
        inner = rho * (1 - margin)
        e = self.fvec[t]
        pos = [(0.0, 0.0), e[0], (e[0][0] + e[1][0], e[0][1] + e[1][1])]
        found = []
        stack = [(t, k, pos[k], pos[(k + 1) % 3]) for k in range(3)]
        steps = 0
        while stack:
            tri, k, a, b = stack.pop()
            if _segment_distance((a[0] - cx, a[1] - cy), (b[0] - cx, b[1] - cy)) >= inner:
                continue
            steps += 1
            if steps > budget:
                raise BudgetExceeded("circumdisk unfolding did not terminate", triangle=t)
            tn, jn = self.adj[tri][k]
            f = self.fvec[tn][(jn + 1) % 3]
            # edge (tn, jn) runs b -> a; the next edge runs a -> d
            d = (a[0] + f[0], a[1] + f[1])
            if math.hypot(d[0] - cx, d[1] - cy) < inner:
                # a vertex inside the disk: report it and stop unfolding around it
                found.append((tn, d))
                continue
            stack.append((tn, (jn + 1) % 3, a, d))
            stack.append((tn, (jn + 2) % 3, d, b))
        return found

    # saddle connections
    def saddle_connections(self, L: float, budget: int = DEFAULT_BUDGET, oriented: bool = False):
        """All saddle connections of metric length at most ``L``.

        Explores, from every corner, the sector between its two edges by
        unfolding triangles across the far edge and narrowing the sector at
        every vertex met.  Each outgoing direction at a cone point is covered
        once because sectors include their first ray only.
        """
        found = []
        visits = 0
        Lf = L * (1 + 1e-12)
        for t0 in range(len(self.edges)):
            for k in range(3):
                start = self.verts[t0][k]
                A = self.edges[t0][k]
                B = A + self.edges[t0][(k + 1) % 3]
                if self.length(A) <= Lf:
                    found.append((A, start, self.verts[t0][(k + 1) % 3], ((t0, k),)))
                fa = self._f(A)
                fb = self._f(B)
                stack = [(t0, (k + 1) % 3, A, B, fa, fb, A, B, ((t0, (k + 1) % 3),))]
                while stack:
                    t, j, A_, B_, fa_, fb_, lo, hi, path = stack.pop()
                    if _segment_distance(fa_, fb_) > Lf:
                        continue
                    visits += 1
                    if visits > budget:
                        raise BudgetExceeded(f"saddle connection search exceeded {budget} steps", L=L)
                    tn, jn = self.adj[t][j]
                    ec = self.edges[tn][(jn + 1) % 3]
                    C = A_ + ec
                    fcv = self.fvec[tn][(jn + 1) % 3]
                    fc = (fa_[0] + fcv[0], fa_[1] + fcv[1])
                    c1 = sign_of(cross(lo, C))
                    c2 = sign_of(cross(C, hi))
                    e1, e2 = (jn + 1) % 3, (jn + 2) % 3
                    if c1 > 0 and c2 > 0:
                        if self.length(C) <= Lf:
                            found.append((C, start, self.verts[tn][e2], path))
                        stack.append((tn, e2, C, B_, fc, fb_, C, hi, path + ((tn, e2),)))
                        stack.append((tn, e1, A_, C, fa_, fc, lo, C, path + ((tn, e1),)))
                    elif c1 <= 0:
                        stack.append((tn, e2, C, B_, fc, fb_, lo, hi, path + ((tn, e2),)))
                    else:
                        stack.append((tn, e1, A_, C, fa_, fc, lo, hi, path + ((tn, e1),)))
        out = {}
        for hol, s, e, path in found:
            if oriented:
                key = (s, e, hol)
                out.setdefault(key, SaddleConnection(hol, s, e, path, self.scale))
                continue
            h, flipped = canonical_holonomy(hol)
            a, b = (e, s) if flipped else (s, e)
            key = (min(a, b), max(a, b), h)
            if key not in out:
                out[key] = SaddleConnection(h, a, b, path, self.scale)
        result = list(out.values())
        result.sort(key=lambda g: (round(self.length(g.holonomy), 12),) + g.sort_key()[1:])
        return result


def _segment_distance(a, b) -> float:
    """Distance from the origin to segment ``ab`` (float metric coordinates)."""
    ax, ay = a
    dx, dy = b[0] - ax, b[1] - ay
    dd = dx * dx + dy * dy
    if dd == 0:
        return math.hypot(ax, ay)
    s = -(ax * dx + ay * dy) / dd
    s = min(1.0, max(0.0, s))
    return math.hypot(ax + s * dx, ay + s * dy)


def enumerate_saddle_connections(S: TranslationSurface, L: float, budget: int = DEFAULT_BUDGET) -> list[SaddleConnection]:
    """Unoriented saddle connections of ``S`` of length at most ``L``, shortest first.

    Marked points count as endpoints, so on the square torus these are the
    primitive lattice vectors up to sign.
    """
    return Mesh.from_surface(S).saddle_connections(L, budget=budget)
