"""Translation surfaces given by polygons glued along edges by translations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    EdgeVectorMismatch,
    LambdaOutOfRange,
    NonPositiveArea,
    PreconditionViolated,
    UnpairedEdge,
)
from .quad import GOLDEN, QuadScalar, Vec2, cross, direction_check, field_of, parse_scalar, sign_of, vec

Edge = tuple[int, int]


@dataclass(frozen=True)
class Singularity:
    index: int
    order: int  # cone angle is 2*pi*order
    corners: tuple[tuple[int, int], ...]

    @property
    def angle(self) -> float:
        return 2 * math.pi * self.order

    @property
    def is_marked(self) -> bool:
        return self.order == 1


@dataclass(frozen=True)
class SaddleConnection:
    """A saddle connection with exact holonomy in the surface chart.

    ``holonomy`` is the exact vector; lengths use ``scale`` (the float factor
    attached to rotated surfaces).  ``path`` lists the (triangle, edge)
    crossings in the triangulation it was traced on.
    """

    holonomy: Vec2
    start: int = 0
    end: int = 0
    path: tuple[tuple[int, int], ...] = ()
    scale: float = 1.0

    @property
    def h(self) -> float:
        return abs(float(self.holonomy.x)) * self.scale

    @property
    def v(self) -> float:
        return abs(float(self.holonomy.y)) * self.scale

    @property
    def length(self) -> float:
        return math.hypot(self.h, self.v)

    def flowed_length(self, t: float) -> float:
        return math.hypot(math.exp(t / 2) * self.h, math.exp(-t / 2) * self.v)

    def sort_key(self):
        x, y = self.holonomy.to_float()
        return (round(self.length, 12), x * self.scale, y * self.scale, self.start, self.end)


def holonomy_components(gamma: SaddleConnection) -> tuple[float, float]:
    """Horizontal and vertical components ``(|Re hol|, |Im hol|)``."""
    return gamma.h, gamma.v


def _canonical(h: Vec2) -> bool:
    """True if ``h`` is the canonical sign representative of ``±h``."""
    sy = sign_of(h.y)
    return sy > 0 or (sy == 0 and sign_of(h.x) > 0)


@dataclass
class TranslationSurface:
    polygons: tuple[tuple[Vec2, ...], ...]
    gluings: dict[Edge, Edge]
    scale: float = 1.0
    singularities: tuple[Singularity, ...] = ()
    vertex_class: dict[tuple[int, int], int] = field(default_factory=dict)
    genus: int = 0
    area: object = 0
    name: str = ""

    @property
    def num_zeros(self) -> int:
        """Number of vertex classes, marked points included."""
        return len(self.singularities)

    @property
    def num_true_zeros(self) -> int:
        return sum(1 for s in self.singularities if s.order > 1)

    @property
    def float_area(self) -> float:
        return float(self.area) * self.scale**2

    @property
    def field(self) -> int:
        return field_of(*(c for poly in self.polygons for v in poly for c in (v.x, v.y)))

    @property
    def nu_strip(self) -> int:
        return 2 * self.genus - 1 + self.num_zeros

    @property
    def nu_delaunay(self) -> int:
        return 2 * self.genus - 2 + self.num_zeros

    def edge_vector(self, p: int, e: int) -> Vec2:
        poly = self.polygons[p]
        return poly[(e + 1) % len(poly)] - poly[e]

    def vertex(self, p: int, v: int) -> Vec2:
        poly = self.polygons[p]
        return poly[v % len(poly)]

    def edges(self):
        for p, poly in enumerate(self.polygons):
            for e in range(len(poly)):
                yield p, e

    def translation(self, p: int, e: int) -> Vec2:
        """Vector carrying points of edge ``(p, e)`` to the glued edge."""
        q, f = self.gluings[(p, e)]
        return self.vertex(q, f + 1) - self.vertex(p, e)

    def normalized(self) -> "TranslationSurface":
        """Same polygons with ``scale`` chosen so the surface has area one."""
        out = _copy(self)
        out.scale = self.scale / math.sqrt(self.float_area)
        return out

    def __repr__(self):
        return (
            f"TranslationSurface({self.name or 'unnamed'}: {len(self.polygons)} polygons, "
            f"g={self.genus}, r={self.num_zeros}, area={self.float_area:g})"
        )


def _copy(S: TranslationSurface, polygons=None, scale=None) -> TranslationSurface:
    return TranslationSurface(
        polygons=S.polygons if polygons is None else polygons,
        gluings=dict(S.gluings),
        scale=S.scale if scale is None else scale,
        singularities=S.singularities,
        vertex_class=dict(S.vertex_class),
        genus=S.genus,
        area=S.area if polygons is None else _total_area(polygons),
        name=S.name,
    )


def _polygon_area2(poly) -> object:
    total = 0
    n = len(poly)
    for i in range(n):
        total = total + cross(poly[i], poly[(i + 1) % n])
    return total


def _total_area(polygons):
    total = 0
    for poly in polygons:
        total = total + _polygon_area2(poly)
    return total * Fraction(1, 2) if not isinstance(total, float) else total / 2


def _interior_angle(a: Vec2, b: Vec2) -> float:
    """Interior angle of a ccw polygon between incoming ``a`` and outgoing ``b``."""
    ax, ay = a.to_float()
    bx, by = b.to_float()
    turn = math.atan2(ax * by - ay * bx, ax * bx + ay * by)
    return math.pi - turn


def build_surface(polygons, gluings, scale: float = 1.0, name: str = "") -> TranslationSurface:
    """Validate a gluing and compute singularities, genus and area.

    ``polygons`` are vertex lists in counterclockwise order; edge ``e`` of
    polygon ``p`` runs from vertex ``e`` to vertex ``e+1``.  ``gluings`` is a
    dict or an iterable of ``((p, e), (q, f))`` pairs.
    """
    polys = tuple(tuple(v if isinstance(v, Vec2) else vec(*v) for v in poly) for poly in polygons)
    pairs = list(gluings.items()) if isinstance(gluings, dict) else list(gluings)
    glue: dict[Edge, Edge] = {}
    all_edges = {(p, e) for p, poly in enumerate(polys) for e in range(len(poly))}
    for a, b in pairs:
        a, b = tuple(a), tuple(b)
        for x, y in ((a, b), (b, a)):
            if x not in all_edges:
                raise UnpairedEdge(f"edge {x} does not exist", edge=x)
            if x in glue and glue[x] != y:
                raise UnpairedEdge(f"edge {x} glued more than once", edge=x)
            glue[x] = y
    for edge in sorted(all_edges):
        if edge not in glue:
            raise UnpairedEdge(f"edge {edge} is not glued", edge=edge)
        if glue[edge] == edge:
            raise UnpairedEdge(f"edge {edge} glued to itself", edge=edge)

    for p, poly in enumerate(polys):
        if len(poly) < 3 or sign_of(_polygon_area2(poly)) <= 0:
            raise NonPositiveArea(f"polygon {p} has non-positive area", polygon=p)

    S = TranslationSurface(polygons=polys, gluings=glue, scale=scale, name=name)
    for (p, e), (q, f) in glue.items():
        u, w = S.edge_vector(p, e), S.edge_vector(q, f)
        if not (u + w).is_zero():
            raise EdgeVectorMismatch(
                f"edge {(p, e)} vector {u} does not match edge {(q, f)} vector {w}",
                edge=(p, e),
                partner=(q, f),
            )

    # vertex classes by union-find on corners
    parent = {(p, v): (p, v) for p, poly in enumerate(polys) for v in range(len(poly))}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[max(rx, ry)] = min(rx, ry)

    for (p, e), (q, f) in glue.items():
        n, m = len(polys[p]), len(polys[q])
        union((p, e), (q, (f + 1) % m))
        union((p, (e + 1) % n), (q, f))

    classes: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for corner in sorted(parent):
        classes.setdefault(find(corner), []).append(corner)
    singularities = []
    vertex_class = {}
    for idx, (root, corners) in enumerate(sorted(classes.items())):
        total = 0.0
        for p, v in corners:
            n = len(polys[p])
            total += _interior_angle(S.edge_vector(p, (v - 1) % n), S.edge_vector(p, v))
        order = round(total / (2 * math.pi))
        if order < 1 or abs(total - 2 * math.pi * order) > 1e-6:
            raise PreconditionViolated(f"cone angle {total} is not a multiple of 2pi")
        singularities.append(Singularity(idx, order, tuple(corners)))
        for c in corners:
            vertex_class[c] = idx

    V = len(singularities)
    E = len(glue) // 2
    F = len(polys)
    chi = V - E + F
    if chi % 2:
        raise PreconditionViolated(f"odd Euler characteristic {chi}")
    genus = (2 - chi) // 2
    # Gauss-Bonnet in integer form: sum (order - 1) = 2g - 2
    if sum(s.order - 1 for s in singularities) != 2 * genus - 2:
        raise PreconditionViolated("Gauss-Bonnet identity fails; polygons are not a closed surface")

    S.singularities = tuple(singularities)
    S.vertex_class = vertex_class
    S.genus = genus
    S.area = _total_area(polys)
    return S


def square_torus() -> TranslationSurface:
    """Unit square with opposite sides identified (one marked point)."""
    square = [vec(0, 0), vec(1, 0), vec(1, 1), vec(0, 1)]
    return build_surface([square], [((0, 0), (0, 2)), ((0, 1), (0, 3))], name="torus")


def parallelogram_torus(u: Vec2, w: Vec2) -> TranslationSurface:
    """Torus ``C / (Z u + Z w)`` drawn as the parallelogram spanned by ``u``, ``w``."""
    if sign_of(cross(u, w)) < 0:
        u, w = w, u
    poly = [vec(0, 0), u, u + w, w]
    return build_surface([poly], [((0, 0), (0, 2)), ((0, 1), (0, 3))], name="torus")


def _as_scalar(lam) -> QuadScalar:
    if isinstance(lam, str):
        return parse_scalar(lam)
    return QuadScalar.coerce(lam)


def slit_double_cover(lam) -> TranslationSurface:
    """Two unit tori glued crosswise along the horizontal slit ``[0, lam]``.

    Each sheet is the hexagon ``(0,0),(lam,0),(1,0),(1,1),(lam,1),(0,1)``.
    The result has genus 2 and two cone points of angle ``4*pi`` at the slit
    endpoints.
    """
    lam = _as_scalar(lam)
    if not (0 < lam < 1):
        raise LambdaOutOfRange(f"slit length {lam} must lie in (0, 1)", lam=str(lam))
    sheet = [vec(0, 0), vec(lam, 0), vec(1, 0), vec(1, 1), vec(lam, 1), vec(0, 1)]
    gl = []
    for s in (0, 1):
        gl.append(((s, 1), (s, 3)))
        gl.append(((s, 2), (s, 5)))
    gl.append(((0, 0), (1, 4)))
    gl.append(((1, 0), (0, 4)))
    S = build_surface([sheet, list(sheet)], gl, name=f"slit-cover({lam})")
    return S


def rotate_to_vertical(S: TranslationSurface, direction) -> TranslationSurface:
    """Rotate ``S`` so that ``direction`` becomes the upward vertical.

    For an exact direction ``(dx, dy)`` the polygons are multiplied by the
    exact matrix ``[[dy, -dx], [dx, dy]]`` and ``scale`` is divided by
    ``|direction|``, so coordinates stay exact.  A float direction yields a
    float-coordinate surface.
    """
    if not isinstance(direction, Vec2):
        direction = vec(*direction)
    direction_check(direction)
    dx, dy = direction.x, direction.y
    length = math.hypot(float(dx), float(dy))
    if isinstance(dx, float):
        dx, dy = dx / length, dy / length
        length = 1.0

    def rot(v: Vec2) -> Vec2:
        x, y = (float(v.x), float(v.y)) if isinstance(dx, float) else (v.x, v.y)
        return Vec2(x * dy - y * dx, x * dx + y * dy)

    polys = tuple(tuple(rot(v) for v in poly) for poly in S.polygons)
    out = _copy(S, polygons=polys, scale=S.scale / length)
    out.name = f"{S.name}@rot"
    return out


def golden_direction() -> Vec2:
    return vec(1, GOLDEN)


def canonical_holonomy(h: Vec2) -> tuple[Vec2, bool]:
    """Return the sign representative of ``±h`` and whether ``h`` was flipped."""
    return (h, False) if _canonical(h) else (-h, True)
