"""Nonergodic directions on slit double covers and slow liminf divergence.

Vectors ``w = λ + 2m + 2n i`` (``n > 0``) are holonomies of saddle
connections joining the two slit endpoints.  Each one splits the cover into
two halves of equal area; a sequence ``w_{j+1} = w_j + 2 v_j`` with
``|w_j × v_j|`` summable converges to a nonergodic direction.
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Callable, Sequence

import shapely
from shapely.geometry import LineString, Polygon, box
from shapely.ops import polygonize, unary_union

from .dynamics import ErgodicReport, unique_ergodicity_probe
from .errors import BudgetExceeded, DegenerateComponents, GeometryBudget, ParseError, PreconditionViolated
from .flow import SystoleTracker
from .quad import QuadScalar, Vec2, cross, dot, format_scalar, parse_scalar, vec
from .surface import TranslationSurface, rotate_to_vertical, slit_double_cover
from .trace import SurfacePoint, Tracer, make_arc

__all__ = [
    "WVector",
    "cross",
    "find_v",
    "ConstructionState",
    "construct_sequence",
    "Partition",
    "partition",
    "partition_and_symdiff",
    "BalanceTime",
    "balance_time",
    "balance_time_from_components",
    "slit_cover_systole",
    "CertificateRow",
    "Certificate",
    "liminf_certificate",
    "EvidenceReport",
    "nonergodicity_evidence",
    "r_function",
    "parse_budgets",
]


# ---------------------------------------------------------------------------
# the set W


@dataclass(frozen=True)
class WVector:
    """``λ + 2m + 2n i`` with ``n > 0``."""

    lam: QuadScalar
    m: int
    n: int

    def __post_init__(self):
        if not isinstance(self.m, int) or not isinstance(self.n, int):
            raise PreconditionViolated("m and n must be integers")
        if self.n <= 0:
            raise PreconditionViolated("W needs n > 0", n=self.n)

    @property
    def value(self) -> Vec2:
        return Vec2(self.lam + 2 * self.m, QuadScalar(2 * self.n))

    @property
    def length(self) -> float:
        try:
            x, y = self.value.to_float()
        except OverflowError:
            return math.inf
        return math.hypot(x, y)

    @classmethod
    def from_holonomy(cls, lam, h: Vec2) -> "WVector":
        """Recover ``(m, n)`` from a holonomy, rejecting vectors outside ``W``."""
        lam = QuadScalar.coerce(lam)
        dx = QuadScalar.coerce(h.x) - lam
        y = QuadScalar.coerce(h.y)
        if not dx.is_rational or not y.is_rational or dx.a.denominator != 1 or y.a.denominator != 1:
            raise PreconditionViolated(f"{h} is not of the form λ + integer + integer i")
        mm, nn = int(dx.a), int(y.a)
        if mm % 2 or nn % 2:
            raise PreconditionViolated(f"{h} has an odd coordinate offset; W needs λ + 2m + 2n i", m=mm, n=nn)
        return cls(lam, mm // 2, nn // 2)

    def __add__(self, v: tuple[int, int]) -> "WVector":
        """``w + 2v`` for a Gaussian integer ``v = (p, q)``."""
        p, q = v
        return WVector(self.lam, self.m + p, self.n + q)


def _gauss(v: tuple[int, int]) -> Vec2:
    return vec(v[0], v[1])


def _cf_convergents(r: QuadScalar):
    """Continued-fraction convergents ``(p, q)`` of an irrational ``r``, computed exactly."""
    p0, q0, p1, q1 = 1, 0, 0, 1
    while True:
        a = math.floor(r)
        p0, q0, p1, q1 = a * p0 + p1, a * q0 + q1, p0, q0
        yield p0, q0
        frac = r - a
        if not frac:
            return
        r = 1 / frac


def find_v(w, a: float, growth: float = 2.0, max_convergents: int = 50) -> tuple[int, int]:
    """Smallest convergent ``p/q`` of ``x(w)/y(w)`` giving a long ``v = p + q i`` nearly parallel to ``w``.

    Returns ``(p, q)`` with ``q > 0``, ``|w × v| < a`` and ``|v| >= growth |w|``,
    all compared exactly.
    """
    if not a > 0:
        raise PreconditionViolated("budget a must be positive", a=a)
    if not growth >= 2:
        raise PreconditionViolated("growth must be at least 2", growth=growth)
    wv = w.value if isinstance(w, WVector) else w
    x, y = QuadScalar.coerce(wv.x), QuadScalar.coerce(wv.y)
    if not y:
        raise PreconditionViolated("w must have a non-zero vertical component")
    if (x / y).is_rational:
        raise PreconditionViolated("x(w)/y(w) must be irrational")
    a_exact = Fraction(a)
    g2 = Fraction(growth) ** 2
    w2 = x * x + y * y
    for k, (p, q) in enumerate(_cf_convergents(x / y)):
        if k >= max_convergents:
            break
        if q <= 0:
            continue
        c = x * q - y * p
        if abs(c) < a_exact and QuadScalar(p * p + q * q) >= w2 * g2:
            return p, q
    raise BudgetExceeded(f"no admissible convergent within {max_convergents}", a=a, growth=growth)


# ---------------------------------------------------------------------------
# construction


def parse_budgets(text: str) -> Callable[[int], float]:
    """``"2^-j"``, ``"c*b^-j"`` or a comma separated list of positive budgets."""
    s = text.replace(" ", "")
    if "j" in s:
        coef = 1.0
        if "*" in s:
            head, s = s.split("*", 1)
            coef = float(head)
        if not s.endswith("^-j"):
            raise ParseError(f"cannot parse budget {text!r}; expected 'b^-j'")
        base = float(s[:-3])
        if base <= 1 or coef <= 0:
            raise PreconditionViolated("budget b^-j needs b > 1 and a positive coefficient")
        return lambda j: coef * base ** (-j)
    vals = [float(v) for v in s.split(",") if v]
    if not vals or any(not v > 0 for v in vals):
        raise PreconditionViolated("budgets must be positive")
    return lambda j: vals[j] if j < len(vals) else vals[-1] * 2.0 ** (-(j - len(vals) + 1))


@dataclass
class ConstructionState:
    """A finite prefix ``w_0, ..., w_J`` and the Gaussian integers joining it."""

    lam: QuadScalar
    ws: list[WVector]
    vs: list[tuple[int, int]]
    budgets: list[float]
    growth: list[float] = field(default_factory=list)
    tail_bound: float = 0.0

    @property
    def J(self) -> int:
        return len(self.ws) - 1

    @property
    def direction(self) -> tuple[float, float]:
        x, y = self.ws[-1].value.to_float()
        n = math.hypot(x, y)
        return x / n, y / n

    def cross_wv(self, j: int) -> QuadScalar:
        return cross(self.ws[j].value, _gauss(self.vs[j]))

    def cross_ww(self, j: int) -> QuadScalar:
        return cross(self.ws[j].value, self.ws[j + 1].value)

    def check(self) -> None:
        """Raise unless every exact invariant of the construction holds."""
        for j, v in enumerate(self.vs):
            w0, w1 = self.ws[j].value, self.ws[j + 1].value
            diff = w1 - w0 - _gauss(v) * 2
            if diff.x or diff.y:
                raise PreconditionViolated(f"w_{j + 1} != w_{j} + 2 v_{j}")
            c = self.cross_wv(j)
            if not abs(c) < Fraction(self.budgets[j]):
                raise PreconditionViolated(f"|w_{j} x v_{j}| >= a_{j}")
            if abs(self.cross_ww(j)) != 2 * abs(c):
                raise PreconditionViolated(f"|w_{j} x w_{j + 1}| != 2 |w_{j} x v_{j}|")

    def cross_sum(self) -> QuadScalar:
        total = QuadScalar(0)
        for j in range(len(self.vs)):
            total = total + abs(self.cross_ww(j))
        return total

    # state file
    def to_json(self) -> str:
        rows = []
        for j, w in enumerate(self.ws):
            row = {"j": j, "m": w.m, "n": w.n}
            if j < len(self.vs):
                row.update(
                    v=list(self.vs[j]),
                    a=repr(self.budgets[j]),
                    growth=repr(self.growth[j]) if j < len(self.growth) else None,
                    cross=format_scalar(self.cross_ww(j)),
                )
            rows.append(row)
        x, y = self.direction
        doc = {
            "lambda": format_scalar(self.lam),
            "sequence": rows,
            "direction": [repr(x), repr(y)],
            "tail_bound": repr(self.tail_bound),
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ConstructionState":
        try:
            doc = json.loads(text)
            lam = parse_scalar(doc["lambda"])
            ws, vs, budgets, growth = [], [], [], []
            for row in doc["sequence"]:
                ws.append(WVector(lam, int(row["m"]), int(row["n"])))
                if "v" in row:
                    vs.append((int(row["v"][0]), int(row["v"][1])))
                    budgets.append(float(row["a"]))
                    if row.get("growth") is not None:
                        growth.append(float(row["growth"]))
            state = cls(lam, ws, vs, budgets, growth, float(doc.get("tail_bound", "0")))
            stored = [row["cross"] for row in doc["sequence"] if "cross" in row]
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise ParseError(f"malformed state file: {exc}") from exc
        state.check()
        for j, s in enumerate(stored):
            if parse_scalar(s) != state.cross_ww(j):
                raise ParseError(f"stored cross product for j={j} does not match the sequence")
        return state


def _as_budget_fn(budgets) -> Callable[[int], float]:
    if callable(budgets):
        return budgets
    if isinstance(budgets, str):
        return parse_budgets(budgets)
    vals = [float(b) for b in budgets]
    return lambda j: vals[j] if j < len(vals) else vals[-1] * 2.0 ** (-(j - len(vals) + 1))


def construct_sequence(
    lam,
    budgets,
    J: int,
    growth: float | Sequence[float] = 2.0,
    w0: WVector | None = None,
    max_convergents: int = 50,
) -> ConstructionState:
    """Build ``w_0, ..., w_J`` with ``w_{j+1} = w_j + 2 v_j`` and ``|w_j × v_j| < a_j``.

    ``budgets`` is a callable ``j -> a_j``, a list, or a string such as
    ``"2^-j"``.  ``growth`` may vary with ``j``.  The default start is
    ``w_0 = λ + 2i``.
    """
    lam = QuadScalar.coerce(parse_scalar(lam) if isinstance(lam, str) else lam)
    if lam.is_rational:
        raise PreconditionViolated("λ must be irrational", lam=str(lam))
    if J < 0:
        raise PreconditionViolated("J must be non-negative")
    a = _as_budget_fn(budgets)
    growths = [float(growth)] * J if isinstance(growth, (int, float)) else [float(g) for g in growth]
    if len(growths) < J:
        growths += [growths[-1] if growths else 2.0] * (J - len(growths))
    ws = [w0 or WVector(lam, 0, 1)]
    vs, used = [], []
    for j in range(J):
        aj = a(j)
        v = find_v(ws[-1], aj, growths[j], max_convergents)
        vs.append(v)
        used.append(aj)
        ws.append(ws[-1] + v)
        if not math.isfinite(ws[-1].length * 1e10):
            raise BudgetExceeded("w_j grew beyond float range", j=j + 1)
    state = ConstructionState(lam, ws, vs, used, growths[:J])
    state.tail_bound = _tail_bound(state, a)
    state.check()
    return state


def _tail_bound(state: ConstructionState, a: Callable[[int], float], terms: int = 200) -> float:
    """Bound on the angle between ``w_J`` and the limit direction.

    Later steps have ``|w_{k+1}| >= 3 |w_k|`` (growth at least two), so the
    angle between ``w_k`` and ``w_{k+1}``, at most ``2 a_k / (|w_k| |w_{k+1}|)``
    up to the factor ``π/2`` relating sine and angle, sums geometrically.
    """
    J = state.J
    L = state.ws[-1].length
    total = 0.0
    for i in range(terms):
        k = J + i
        term = 2 * a(k) / (3.0 ** (2 * i + 1) * L * L)
        total += term
        if term < 1e-300:
            break
    return math.pi / 2 * total


# ---------------------------------------------------------------------------
# partitions


def floor_sum(n: int, alpha, beta) -> int:
    """``sum(floor(alpha*i + beta) for i in range(n))`` for exact ``alpha``, ``beta``.

    Euclid-style recursion on the slope, so the cost grows with ``log n``.
    """
    alpha, beta = QuadScalar.coerce(alpha), QuadScalar.coerce(beta)
    total = 0
    while n > 0:
        fa = math.floor(alpha)
        if fa:
            total += fa * (n * (n - 1) // 2)
            alpha = alpha - fa
        fb = math.floor(beta)
        if fb:
            total += fb * n
            beta = beta - fb
        if not alpha:
            break
        y = alpha * n + beta
        n2 = math.floor(y)
        if n2 == 0:
            break
        # count lattice points under the line by columns instead of rows
        n, alpha, beta = n2, 1 / alpha, (y - n2) / alpha
    return total


def parity(w: WVector, px: float, py: float) -> int:
    """1 if ``(px, py)`` in the unit square lies in an odd number of lattice translates of the triangle ``(0, λ, w)``.

    At height ``py + b`` the triangle spans ``[L_b, R_b)`` with
    ``L_b = (λ + 2m)(py + b)/2n`` and ``R_b = λ + m(py + b)/n``; the count of
    integers ``a`` with ``px + a`` in that span is ``floor(R_b - px) - floor(L_b - px)``
    for irrational ends, summed exactly.
    """
    lam = w.lam
    px, py = Fraction(px), Fraction(py)
    Y = 2 * w.n
    X = lam + 2 * w.m
    left = floor_sum(Y, X / Y, X * py / Y - px)
    right = floor_sum(Y, Fraction(w.m, w.n), lam + Fraction(w.m, w.n) * py - px)
    return (right - left) & 1


def _sigma_segments(w: WVector, lam: float, budget: int | None = None) -> list[LineString]:
    """The segment from 0 to ``w`` cut into pieces of the unit square."""
    X, Y = lam + 2 * w.m, 2 * w.n
    if budget is not None and abs(X) + abs(Y) > budget:
        raise GeometryBudget(f"about {int(abs(X) + abs(Y))} segments exceed the clipping cap {budget}",
                             segments=int(abs(X) + abs(Y)))
    ts = {0.0, 1.0}
    if X:
        k0, k1 = sorted((0.0, X))
        ts.update((k / X) for k in range(math.ceil(k0), math.floor(k1) + 1))
    ts.update(k / Y for k in range(1, Y))
    ts = sorted(t for t in ts if 0 <= t <= 1)
    segs = []
    for t0, t1 in zip(ts, ts[1:]):
        if t1 - t0 < 1e-15:
            continue
        mid = (t0 + t1) / 2
        sx, sy = math.floor(mid * X), math.floor(mid * Y)
        segs.append(LineString([(t0 * X - sx, t0 * Y - sy), (t1 * X - sx, t1 * Y - sy)]))
    return segs


@dataclass
class Partition:
    """Two halves of the slit cover cut along the curve determined by ``w``.

    ``region`` is the part ``F`` of the unit square where the two sheet
    labellings disagree; half A is ``(sheet 0 minus F) ∪ (sheet 1 ∩ F)``.
    """

    w: WVector
    region: object  # shapely geometry in unscaled sheet coordinates
    scale: float

    @property
    def region_area(self) -> float:
        return float(self.region.area)

    @property
    def areas(self) -> tuple[float, float]:
        square = box(0, 0, 1, 1)
        outside = square.difference(self.region).area
        inside = self.region.area
        s2 = self.scale**2
        return (outside + inside) * s2, (inside + outside) * s2

    def component(self, sheet: int, x: float, y: float) -> int:
        """0 for half A, 1 for half B."""
        return parity(self.w, x, y) ^ sheet


def _faces(segments, budget: int):
    if len(segments) > budget:
        raise GeometryBudget(f"{len(segments)} segments exceed the clipping cap {budget}", segments=len(segments))
    square = box(0, 0, 1, 1)
    lines = unary_union(segments + [square.exterior])
    faces = list(polygonize(lines))
    # noding leaves slivers of rounding-error size; they carry no area
    negligible = sum(f.area for f in faces if f.area < 1e-12)
    if negligible > 1e-10:
        raise GeometryBudget("too much area in degenerate faces", area=negligible)
    return [f for f in faces if f.area >= 1e-12]


def _check_slit_cover(S: TranslationSurface, lam: QuadScalar) -> None:
    ref = slit_double_cover(lam)
    if len(S.polygons) != 2 or S.gluings != ref.gluings or tuple(map(tuple, S.polygons)) != tuple(map(tuple, ref.polygons)):
        raise PreconditionViolated("surface must be the slit double cover for the given λ")


def partition(S: TranslationSurface, w: WVector, budget: int = 5000) -> Partition:
    """The two halves determined by ``w`` as polygon unions."""
    _check_slit_cover(S, w.lam)
    lam = float(w.lam)
    faces = _faces(_sigma_segments(w, lam, budget), budget)
    odd = [f for f in faces if _classify(f, (w,))[0] == 1]
    region = unary_union(odd) if odd else Polygon()
    return Partition(w, region, S.scale)


def _classify(face, ws) -> tuple[int, ...]:
    """Parities of a convex face, read at its centroid and checked towards every vertex.

    Near-parallel cut curves can be merged by the noding step; a face whose
    sample points disagree means the overlay lost a cut.
    """
    c = face.centroid
    pts = [(c.x, c.y)] + [(0.5 * (c.x + x), 0.5 * (c.y + y)) for x, y in face.exterior.coords[:-1]]
    first = tuple(parity(w, *pts[0]) for w in ws)
    for p in pts[1:]:
        if tuple(parity(w, *p) for w in ws) != first:
            raise GeometryBudget("cut curves too close to overlay reliably", face_area=face.area)
    return first


@dataclass
class SymdiffResult:
    areas: tuple[float, float]
    areas_next: tuple[float, float]
    symdiff: float
    cross: float
    faces: int

    @property
    def within_bound(self) -> bool:
        return self.symdiff <= self.cross + 1e-9


def partition_and_symdiff(S: TranslationSurface, w: WVector, w_next: WVector, budget: int = 5000) -> SymdiffResult:
    """Areas of both halves for ``w`` and ``w_next`` and the area where the two partitions disagree.

    The disagreement is computed on the overlay of both cut curves, face by
    face, and minimised over the two ways of matching halves.
    """
    if w.lam != w_next.lam:
        raise PreconditionViolated("w vectors must share λ")
    _check_slit_cover(S, w.lam)
    lam = float(w.lam)
    s1, s2 = _sigma_segments(w, lam, budget), _sigma_segments(w_next, lam, budget)
    if len(s1) * len(s2) > budget * budget // 4:
        raise GeometryBudget("overlay too large", segments=(len(s1), len(s2)))
    faces = _faces(s1 + s2, budget)
    total = sum(f.area for f in faces)
    F1 = F2 = D = 0.0
    for f in faces:
        a, b = _classify(f, (w, w_next))
        F1 += f.area * a
        F2 += f.area * b
        D += f.area * (a ^ b)
    s2c = S.scale**2
    # each sheet contributes D (or 1 - D when the halves are matched the other way)
    sym = 2 * min(D, total - D) * s2c
    areas = ((total - F1 + F1) * s2c, (F1 + total - F1) * s2c)
    areas_next = ((total - F2 + F2) * s2c, (F2 + total - F2) * s2c)
    c = abs(float(cross(w.value, w_next.value))) * s2c
    return SymdiffResult(areas, areas_next, sym, c, len(faces))


def triangle_parity_area(z1: Vec2, z2: Vec2, budget: int = 200000) -> float:
    """Area of the odd-parity part of the lattice translates of the triangle ``(0, z1, z2)``.

    Computed by clipping the triangle against unit cells; used to
    cross-check the overlay computation of partition differences.
    """
    pts = [(0.0, 0.0), z1.to_float(), z2.to_float()]
    tri = Polygon(pts)
    xs, ys = [p[0] for p in pts], [p[1] for p in pts]
    cells = []
    for b in range(math.floor(min(ys)), math.ceil(max(ys))):
        band = tri.intersection(box(min(xs) - 1, b, max(xs) + 1, b + 1))
        if band.is_empty:
            continue
        x0, _, x1, _ = band.bounds
        for a_ in range(math.floor(x0), math.ceil(x1)):
            piece = band.intersection(box(a_, b, a_ + 1, b + 1))
            if not piece.is_empty and piece.area > 0:
                cells.append(shapely.affinity.translate(piece, -a_, -b))
                if len(cells) > budget:
                    raise GeometryBudget("triangle covers too many cells")
    acc = Polygon()
    for c in cells:
        acc = acc.symmetric_difference(c)
    return float(acc.area)


# ---------------------------------------------------------------------------
# balance times


@dataclass
class BalanceTime:
    t: float
    length: float  # common length of both flowed vectors
    angle: float  # angle between them
    flowed: tuple[tuple[float, float], tuple[float, float]]
    components: tuple[tuple[float, float], tuple[float, float]]  # (h, v) of each, before flowing

    @property
    def length_product(self) -> float:
        return self.length * self.length


def balance_time_from_components(hv: tuple[float, float], hv_next: tuple[float, float]) -> BalanceTime:
    """Time at which ``(e^{t/2} h, e^{-t/2} v)`` has the same length for both pairs.

    Worked in logarithms so that very long vectors do not overflow.
    """
    h1, v1 = hv
    h2, v2 = hv_next
    if not abs(h1) > abs(h2) or not abs(v2) > abs(v1):
        raise DegenerateComponents("need |h| to shrink and |v| to grow", h=(h1, h2), v=(v1, v2))
    log_num = 2 * math.log(abs(v2)) + math.log1p(-((v1 / v2) ** 2))
    log_den = 2 * math.log(abs(h1)) + math.log1p(-((h2 / h1) ** 2))
    t = 0.5 * (log_num - log_den)

    def flowed(h, v):
        fx = math.copysign(math.exp(t / 2 + math.log(abs(h))), h) if h else 0.0
        fy = math.copysign(math.exp(-t / 2 + math.log(abs(v))), v) if v else 0.0
        return fx, fy

    a, b = flowed(h1, v1), flowed(h2, v2)
    la, lb = math.hypot(*a), math.hypot(*b)
    if abs(la - lb) > 1e-9 * max(la, 1.0):
        raise DegenerateComponents("flowed lengths disagree", lengths=(la, lb))
    cosang = (a[0] * b[0] + a[1] * b[1]) / (la * lb)
    angle = math.acos(max(-1.0, min(1.0, cosang)))
    return BalanceTime(t, la, angle, (a, b), (hv, hv_next))


def _components(w: Vec2, direction) -> tuple[float, float]:
    """Signed components of ``w`` across and along ``direction``.

    An exact direction keeps the small transverse part exact before the
    final rounding.
    """
    if isinstance(direction, Vec2):
        n = math.hypot(*direction.to_float())
        return float(cross(w, direction)) / n, float(dot(w, direction)) / n
    dx, dy = direction
    n = math.hypot(dx, dy)
    x, y = w.to_float()
    return (x * dy - y * dx) / n, (x * dx + y * dy) / n


def balance_time(w, w_next, direction=(0.0, 1.0)) -> BalanceTime:
    """Balance time of two vectors once ``direction`` is rotated to vertical."""
    w = w.value if isinstance(w, WVector) else w
    w_next = w_next.value if isinstance(w_next, WVector) else w_next
    return balance_time_from_components(_components(w, direction), _components(w_next, direction))


# ---------------------------------------------------------------------------
# systole of a flowed slit cover


def _dec(x: QuadScalar) -> Decimal:
    x = QuadScalar.coerce(x)
    out = Decimal(x.a.numerator) / Decimal(x.a.denominator)
    if x.b:
        out += Decimal(x.b.numerator) / Decimal(x.b.denominator) * Decimal(x.d).sqrt()
    return out


def _digits(x: QuadScalar) -> int:
    x = QuadScalar.coerce(x)
    return max(len(str(abs(c.numerator))) + len(str(c.denominator)) for c in (x.a, x.b))


class _Form:
    """``Q(v) = e^t (v × u)^2 + e^{-t} (v · u)^2 / |u|^2`` evaluated in high precision."""

    def __init__(self, u: Vec2, t: float):
        self.u = u
        self.et = Decimal(t).exp()
        self.nu2 = _dec(u.x * u.x + u.y * u.y)

    def comps(self, vx, vy):
        v = Vec2(QuadScalar.coerce(vx), QuadScalar.coerce(vy))
        return _dec(cross(v, self.u)), _dec(dot(v, self.u))

    def value(self, vx, vy) -> Decimal:
        c, d = self.comps(vx, vy)
        return (self.et * c * c + d * d / self.et) / self.nu2

    def bilinear(self, a, b) -> Decimal:
        ca, da = self.comps(*a)
        cb, db = self.comps(*b)
        return (self.et * ca * cb + da * db / self.et) / self.nu2


def _reduce(form: _Form, budget: int = 100000):
    b1, b2 = (1, 0), (0, 1)
    q1, q2 = form.value(*b1), form.value(*b2)
    for _ in range(budget):
        if q2 < q1:
            b1, b2, q1, q2 = b2, b1, q2, q1
        mu = int((form.bilinear(b1, b2) / q1).to_integral_value())
        if mu == 0:
            return b1, b2, q1, q2
        b2 = (b2[0] - mu * b1[0], b2[1] - mu * b1[1])
        q2 = form.value(*b2)
    raise BudgetExceeded("lattice reduction did not converge")


def _short_vectors(form: _Form, b1, b2, q1, bound: Decimal, centre=(Decimal(0), Decimal(0))):
    """Integer pairs ``(i, j)`` with ``Q(i b1 + j b2 + centre) <= bound`` (centre given in basis coordinates)."""
    g12 = form.bilinear(b1, b2)
    q2 = form.value(*b2)
    mu = g12 / q1
    det = q2 - mu * g12
    ci, cj = centre
    out = []
    jr = (bound / det).sqrt() if det > 0 else Decimal(0)
    for j in range(int((cj - jr).to_integral_value()) - 1, int((cj + jr).to_integral_value()) + 2):
        rest = bound - (j - cj) ** 2 * det
        if rest < 0:
            continue
        mid = ci - (j - cj) * mu
        ir = (rest / q1).sqrt()
        for i in range(int((mid - ir).to_integral_value()) - 1, int((mid + ir).to_integral_value()) + 2):
            out.append((i, j))
    return out


@dataclass
class SystoleWitness:
    length: float
    holonomy: str
    kind: str  # "closed" (endpoint to itself) or "slit" (between the two endpoints)


def slit_cover_systole(lam, direction: Vec2, t: float, bound: float | None = None) -> SystoleWitness:
    """Shortest saddle connection of the slit cover rotated so ``direction`` is vertical, flowed to time ``t``.

    Saddle connection holonomies are the primitive Gaussian integers with
    non-zero imaginary part, ``λ + m + n i`` with ``n != 0``, and ``λ``,
    ``λ - 1``; the shortest one under the flowed norm is found by lattice
    reduction in high precision.
    """
    lam = QuadScalar.coerce(parse_scalar(lam) if isinstance(lam, str) else lam)
    u = Vec2(QuadScalar.coerce(direction.x), QuadScalar.coerce(direction.y))
    prec = 60 + 2 * max(_digits(u.x), _digits(u.y), _digits(lam)) + int(abs(t) / 2.3)
    with localcontext() as ctx:
        ctx.prec = prec
        form = _Form(u, t)
        b1, b2, q1, q2 = _reduce(form)
        cand = [(form.value(lam, 0), f"{format_scalar(lam)}", "slit"),
                (form.value(lam - 1, 0), f"{format_scalar(lam - 1)}", "slit")]
        # reduced-basis candidates keep the enumeration below a handful of points
        for m, n in (b1, b2, (b1[0] + b2[0], b1[1] + b2[1]), (b1[0] - b2[0], b1[1] - b2[1])):
            if n != 0 and math.gcd(m, n) == 1:
                cand.append((form.value(m, n), f"({m}, {n})", "closed"))
        det = b1[0] * b2[1] - b1[1] * b2[0]
        lx = _dec(lam)
        ci = -(lx * b2[1]) / det
        cj = (lx * b1[1]) / det
        for di in (0, 1):
            for dj in (0, 1):
                i, j = int(ci.to_integral_value()) - di, int(cj.to_integral_value()) - dj
                m, n = i * b1[0] + j * b2[0], i * b1[1] + j * b2[1]
                if n != 0:
                    cand.append((form.value(lam + m, QuadScalar(n)), f"({format_scalar(lam + m)}, {n})", "slit"))
        B = min(c[0] for c in cand)
        if bound is not None:
            B = min(B, Decimal(bound) ** 2)
        # closed loops: primitive lattice vectors off the real axis
        for i, j in _short_vectors(form, b1, b2, q1, B * Decimal("1.000001")):
            m, n = i * b1[0] + j * b2[0], i * b1[1] + j * b2[1]
            if n == 0 or math.gcd(m, n) != 1:
                continue
            cand.append((form.value(m, n), f"({m}, {n})", "closed"))
        # slit connections: lam + lattice, in basis coordinates centre = -(lam, 0)
        for i, j in _short_vectors(form, b1, b2, q1, B * Decimal("1.000001"), (ci, cj)):
            m, n = i * b1[0] + j * b2[0], i * b1[1] + j * b2[1]
            if n == 0 and m not in (0, -1):
                continue
            h = lam + m
            cand.append((form.value(h, QuadScalar(n)), f"({format_scalar(h)}, {n})", "slit"))
        q, label, kind = min(cand, key=lambda c: c[0])
        return SystoleWitness(float(q.sqrt()), label, kind)


# ---------------------------------------------------------------------------
# liminf certificate


def r_function(name: str) -> Callable[[float], float]:
    """Named divergence rates: ``loglog``, ``log``, ``t``, ``sqrtlog``."""
    table = {
        "loglog": lambda t: math.log(math.log(t)) if t > math.e else -math.inf,
        "log": lambda t: math.log(t) if t > 1 else -math.inf,
        "t": lambda t: t,
        "sqrtlog": lambda t: math.sqrt(math.log(t)) if t > 1 else -math.inf,
    }
    if name not in table:
        raise PreconditionViolated(f"unknown rate {name!r}", known=sorted(table))
    return table[name]


@dataclass
class CertificateRow:
    j: int
    w_length: float
    cross: float
    t: float
    ell: float
    d: float
    r: float
    ratio: float
    witness_length: float
    angle: float
    witness_bound_ok: bool  # |w_j^t|^2 <= (5/3) |w_j × w_{j+1}|
    systole_ok: bool  # ell <= witness length
    gap: float  # d(t_j) + log |w_j × w_{j+1}|
    systole_holonomy: str
    flow_ell: float | None = None  # systole from the Delaunay mesh, when computed


@dataclass
class Certificate:
    rows: list[CertificateRow]
    j0: int | None
    C_hat: float
    routes_agree: bool

    @property
    def passed(self) -> bool:
        return self.j0 is not None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "w_length", "cross", "t", "d", "r", "ratio"])
        for r in self.rows:
            w.writerow([r.j] + [f"{x:.12g}" for x in (r.w_length, r.cross, r.t, r.d, r.r, r.ratio)])
        return buf.getvalue()


def liminf_certificate(
    S: TranslationSurface,
    state: ConstructionState,
    r: Callable[[float], float] | str = "loglog",
    flow_t_max: float = 30.0,
    flow_size_max: float = 1e15,
) -> Certificate:
    """Balance times, systoles and ``d(t_j) / r(t_j)`` for every step of ``state``.

    The systole is enumerated on the slit cover by lattice reduction; where
    the numbers are small enough it is also computed independently from the
    Delaunay mesh of the rotated cover, and the two must agree.
    """
    _check_slit_cover(S, state.lam)
    rf = r_function(r) if isinstance(r, str) else r
    u = state.ws[-1].value
    rows = []
    agree = True
    tracker = None
    if state.ws[-1].length <= flow_size_max:
        tracker = SystoleTracker(rotate_to_vertical(S, u))
    for j in range(state.J):
        bt = balance_time(state.ws[j], state.ws[j + 1], u)
        c = abs(float(state.cross_ww(j)))
        sw = slit_cover_systole(state.lam, u, bt.t, bound=bt.length * (1 + 1e-9))
        ell = sw.length
        flow_ell = None
        if tracker is not None and bt.t <= flow_t_max and bt.t >= tracker.t:
            flow_ell, _ = tracker.systole(bt.t)
            if abs(flow_ell - ell) > 1e-7 * max(ell, 1.0):
                agree = False
        d = -2 * math.log(ell)
        rt = rf(bt.t)
        ratio = d / rt if rt > 0 else math.inf
        rows.append(
            CertificateRow(
                j, state.ws[j].length, c, bt.t, ell, d, rt, ratio, bt.length, bt.angle,
                bt.length_product <= 5 / 3 * c * (1 + 1e-9), ell <= bt.length * (1 + 1e-9),
                d + math.log(c), sw.holonomy, flow_ell,
            )
        )
    j0 = None
    for k in range(len(rows) - 1, -1, -1):
        if rows[k].ratio < 0.5:
            j0 = k
        else:
            break
    C_hat = max((row.gap for row in rows), default=math.nan)
    return Certificate(rows, j0, C_hat, agree)


# ---------------------------------------------------------------------------
# evidence of nonergodicity


@dataclass
class EvidenceReport:
    """Ergodic-average spread between starts from the two halves cut out by ``w_J``."""

    report: ErgodicReport
    components: list[int]
    one_sided: bool
    arc_length: float
    threshold: float = 0.1

    @property
    def deviations(self) -> list[float]:
        return self.report.deviations

    @property
    def max_deviation(self) -> float:
        return self.report.max_deviation

    @property
    def persistent(self) -> bool:
        return self.report.persistent(self.threshold)

    def to_csv(self) -> str:
        out = self.report.to_csv()
        out += "components," + ",".join(str(c) for c in self.components) + "\n"
        out += f"one_sided,{int(self.one_sided)}\n"
        return out


def nonergodicity_evidence(
    S: TranslationSurface,
    state: ConstructionState,
    T: float,
    starts_per_half: int = 4,
    horizons=(1, 2),
    seed: int = 0,
    one_half: int | None = None,
) -> EvidenceReport:
    """Run the ergodic-average probe along ``w_J`` from starts in both halves.

    The test arc is the horizontal circle at height 1/2 on sheet 0.  The
    two halves meet it in different proportions whenever ``F`` does not
    cover exactly half of a sheet, so their averages separate.
    ``one_half`` restricts the starts to a single half (the report then
    flags one-sided sampling).
    """
    _check_slit_cover(S, state.lam)
    w = state.ws[-1]
    u = state.direction
    tracer = Tracer(S)
    arc = make_arc(tracer, SurfacePoint(0, 0.0, 0.5), (1.0, 0.0), S.scale, at_vertex=None)
    rng = random.Random(seed)
    starts, comps = [], []
    wanted = [0, 1] if one_half is None else [one_half]
    for half in wanted:
        got = 0
        while got < starts_per_half:
            sheet = rng.randrange(2)
            px, py = rng.random(), rng.random()
            if py < 1e-9 or min(px, py) < 1e-6:
                continue
            if parity(w, px, py) ^ sheet != half:
                continue
            starts.append(SurfacePoint(sheet, px, py))
            comps.append(half)
            got += 1
    report = unique_ergodicity_probe(S, arc, starts, T, direction=u, horizons=horizons, tracer=tracer)
    return EvidenceReport(report, comps, len(set(comps)) < 2, arc.length)
