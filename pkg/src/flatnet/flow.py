"""Teichmueller geodesic flow, systole traces and divergence-rate checks."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

from .errors import PreconditionViolated
from .mesh import DEFAULT_BUDGET, Mesh
from .surface import SaddleConnection, TranslationSurface


@dataclass(frozen=True)
class DivergenceProfile:
    """Constants of a logarithmic divergence rate.

    ``eps`` and ``C`` bound ``d(t) < eps*log(t) + C``; ``c`` bounds the
    systole from below; ``c_prime`` and ``h0`` enter the saddle connection
    form of the condition.
    """

    eps: float = 0.0
    C: float = 1.0
    c: float = 0.5
    c_prime: float = 0.2
    h0: float = 0.1

    def __post_init__(self):
        values = (self.eps, self.C, self.c, self.c_prime, self.h0)
        if not all(math.isfinite(v) for v in values):
            raise PreconditionViolated("profile constants must be finite")
        if self.eps < 0 or self.c <= 0 or self.c_prime <= 0 or self.h0 <= 0:
            raise PreconditionViolated("need eps >= 0 and c, c', h0 > 0")


@dataclass(frozen=True)
class FlowedSurface:
    base: TranslationSurface
    t: float

    def holonomy(self, gamma: SaddleConnection) -> tuple[float, float]:
        x, y = gamma.holonomy.to_float()
        return math.exp(self.t / 2) * x * gamma.scale, math.exp(-self.t / 2) * y * gamma.scale

    def length(self, gamma: SaddleConnection) -> float:
        return math.hypot(*self.holonomy(gamma))

    @property
    def area(self) -> float:
        return self.base.float_area


def apply_flow(S: TranslationSurface, t: float) -> FlowedSurface:
    return FlowedSurface(S, float(t))


def normalize(S: TranslationSurface) -> TranslationSurface:
    """Rescale ``S`` to unit area."""
    return S.normalized()


class SystoleTracker:
    """Delaunay triangulation carried along the flow for repeated systole queries.

    The shortest saddle connection of a surface is an edge of its Delaunay
    triangulation, so the shortest Delaunay edge is an upper bound ``ell_ub``;
    all saddle connections of flowed length at most ``ell_ub`` are then
    enumerated to certify the minimum.
    """

    def __init__(self, S: TranslationSurface, budget: int = DEFAULT_BUDGET, max_step: float = 1.0):
        self.surface = S
        self.mesh = Mesh.from_surface(S)
        self.budget = budget
        self.max_step = max_step
        self.t = 0.0
        self.mesh.set_time(0.0)
        self.mesh.make_delaunay()

    def _move_to(self, t: float) -> None:
        # step in bounded increments so every flip decision is well conditioned
        while abs(t - self.t) > self.max_step:
            self.t += math.copysign(self.max_step, t - self.t)
            self.mesh.set_time(self.t)
            self.mesh.make_delaunay()
        self.t = t
        self.mesh.set_time(t)
        self.mesh.make_delaunay()

    def systole(self, t: float) -> tuple[float, SaddleConnection]:
        if t < 0:
            raise PreconditionViolated("systole needs t >= 0")
        self._move_to(t)
        m = self.mesh
        ub = min(m.length(e) for tri in m.edges for e in tri)
        conns = m.saddle_connections(ub, budget=self.budget)
        witness = conns[0]
        return m.length(witness.holonomy), witness

    def connections(self, t: float, L: float) -> list[SaddleConnection]:
        """Saddle connections of length at most ``L`` on the surface at time ``t``."""
        self._move_to(t)
        return self.mesh.saddle_connections(L, budget=self.budget)


def systole(S: TranslationSurface, t: float, budget: int = DEFAULT_BUDGET) -> tuple[float, SaddleConnection]:
    """Length of the shortest saddle connection of ``X_t`` and a witness."""
    return SystoleTracker(S, budget).systole(t)


@dataclass(frozen=True)
class TracePoint:
    t: float
    ell: float
    d: float
    d_normalized: float
    witness: SaddleConnection
    witness_hx: float
    witness_hy: float


def d_trace(S: TranslationSurface, t_grid, budget: int = DEFAULT_BUDGET) -> list[TracePoint]:
    """``d(t) = -2 log ell(X_t)`` on an increasing grid, warm-started."""
    grid = list(t_grid)
    if any(b <= a for a, b in zip(grid, grid[1:])) or (grid and grid[0] < 0):
        raise PreconditionViolated("t grid must be increasing and non-negative")
    tracker = SystoleTracker(S, budget)
    log_area = math.log(S.float_area)
    out = []
    for t in grid:
        ell, w = tracker.systole(t)
        d = -2 * math.log(ell)
        hx, hy = FlowedSurface(S, t).holonomy(w)
        out.append(TracePoint(t, ell, d, d + log_area, w, hx, hy))
    return out


def parse_grid(spec: str) -> list[float]:
    """``"start:stop:step"`` (inclusive stop) or a comma separated list."""
    if ":" in spec:
        a, b, h = (float(x) for x in spec.split(":"))
        if h <= 0 or b < a:
            raise PreconditionViolated(f"bad grid {spec!r}")
        n = int(round((b - a) / h))
        return [a + i * h for i in range(n + 1)]
    return [float(x) for x in spec.split(",") if x.strip()]


def trace_csv(points: list[TracePoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "ell", "d", "witness_hx", "witness_hy"])
    for p in points:
        w.writerow([f"{p.t:.12g}", f"{p.ell:.12g}", f"{p.d:.12g}", f"{p.witness_hx:.12g}", f"{p.witness_hy:.12g}"])
    return buf.getvalue()


@dataclass
class ConditionRow:
    holonomy: str
    h: float
    v: float
    bound: float
    margin: float
    exempt: bool
    violated: bool


@dataclass
class ConditionReport:
    profile: DivergenceProfile
    V_max: float
    rows: list[ConditionRow] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not any(r.violated for r in self.rows)

    @property
    def violations(self) -> list[ConditionRow]:
        return [r for r in self.rows if r.violated]

    def min_product(self) -> float:
        """Smallest ``h * v`` over the checked, non-exempt connections."""
        vals = [r.h * r.v for r in self.rows if not r.exempt]
        return min(vals) if vals else math.inf


def check_condition_c(
    S: TranslationSurface, profile: DivergenceProfile, V_max: float, budget: int = DEFAULT_BUDGET
) -> ConditionReport:
    """Check ``h > c' / (v (log v)^eps)`` for saddle connections with ``h < h0``, ``v <= V_max``.

    Connections with ``v <= e`` are listed but exempt.  The search runs on
    the surface flowed to ``t = log(V_max / h0)``, where the box
    ``h < h0, v <= V_max`` fits in a disk of radius ``sqrt(2 h0 V_max)``.
    """
    if not V_max > math.e:
        raise PreconditionViolated("V_max must exceed e", V_max=V_max)
    h0 = profile.h0
    t = max(0.0, math.log(V_max / h0))
    L = math.sqrt(math.exp(t) * h0 * h0 + math.exp(-t) * V_max * V_max)
    tracker = SystoleTracker(S, budget)
    report = ConditionReport(profile, V_max)
    for g in tracker.connections(t, L):
        h, v = g.h, g.v
        if not (h < h0 and v <= V_max):
            continue
        exempt = v <= math.e
        bound = profile.c_prime / (v * math.log(v) ** profile.eps) if v > 1 else math.inf
        margin = h - bound
        report.rows.append(ConditionRow(str(g.holonomy), h, v, bound, margin, exempt, (not exempt) and margin <= 0))
    report.rows.sort(key=lambda r: (r.v, r.h))
    return report


@dataclass
class EquivalenceReport:
    profile: DivergenceProfile
    points: list[TracePoint]
    a_holds: bool
    b_holds: bool
    consistent: bool
    C_inf: float  # smallest admissible C for (a) with the profile's eps
    c_sup: float  # largest admissible c for (b); equals exp(-C_inf/2)
    condition_c: ConditionReport | None = None


def equivalence_probe(
    S: TranslationSurface,
    profile: DivergenceProfile,
    t_grid,
    V_max: float | None = 100.0,
    budget: int = DEFAULT_BUDGET,
) -> EquivalenceReport:
    """Compare the ``d(t)`` and systole forms of the rate condition on a grid.

    Both forms are evaluated independently at every ``t > 0`` of the grid:
    ``d(t) < eps log t + C`` and ``ell(X_t) > exp(-C/2) t^(-eps/2)``.
    """
    pts = d_trace(S, t_grid, budget)
    eps, C = profile.eps, profile.C
    c = math.exp(-C / 2)
    a_ok = b_ok = True
    consistent = True
    C_inf = -math.inf
    c_sup = math.inf
    for p in pts:
        if p.t <= 0:
            continue
        lt = math.log(p.t)
        a = p.d < eps * lt + C
        b = p.ell > c * p.t ** (-eps / 2)
        a_ok &= a
        b_ok &= b
        # the two inequalities are algebraically equivalent; they can only
        # disagree within rounding of the boundary case
        if a != b and abs(p.d - eps * lt - C) > 1e-9:
            consistent = False
        C_inf = max(C_inf, p.d - eps * lt)
        c_sup = min(c_sup, p.ell * p.t ** (eps / 2))
    cond = check_condition_c(S, profile, V_max, budget) if V_max else None
    return EquivalenceReport(profile, pts, a_ok, b_ok, consistent, C_inf, c_sup, cond)
