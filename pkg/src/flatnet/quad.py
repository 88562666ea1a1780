"""Exact arithmetic in real quadratic fields Q(sqrt d) and planar vectors over them.

All holonomy coordinates are stored as :class:`QuadScalar` so that orientation
tests and cross products are exact.  Conversion to ``float`` is done without
cancellation, which matters when ``a`` and ``b*sqrt(d)`` nearly cancel.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

from .errors import MixedField, ParseError, ZeroDirection


def _squarefree(d: int) -> bool:
    if d < 2:
        return d in (0,)
    k = 2
    while k * k <= d:
        if d % (k * k) == 0:
            return False
        k += 1
    return True


class QuadScalar:
    """The number ``a + b*sqrt(d)`` with rational ``a``, ``b``.

    ``d`` is zero for plain rationals; a scalar with ``b == 0`` combines with
    any field, two scalars with ``b != 0`` must share ``d``.

    >>> x = QuadScalar(-1, 1, 2)
    >>> float(x * x + 2 * x)
    1.0
    """

    __slots__ = ("a", "b", "d")

    def __init__(self, a=0, b=0, d=0):
        a = Fraction(a)
        b = Fraction(b)
        d = int(d)
        if b == 0:
            d = 0
        elif d == 0:
            raise ValueError("non-zero sqrt coefficient needs d > 1")
        elif d == 1 or not _squarefree(d):
            raise ValueError(f"d={d} must be square-free and > 1")
        self.a = a
        self.b = b
        self.d = d

    # construction helpers
    @classmethod
    def coerce(cls, value) -> "QuadScalar":
        if isinstance(value, QuadScalar):
            return value
        if isinstance(value, (int, Rational)):
            return cls(value)
        if isinstance(value, float):
            return cls(Fraction(value))
        raise TypeError(f"cannot coerce {type(value).__name__} to QuadScalar")

    @classmethod
    def sqrt(cls, d: int) -> "QuadScalar":
        r = math.isqrt(d)
        if r * r == d:
            return cls(r)
        # pull out square factors
        k, core = 1, d
        f = 2
        while f * f <= core:
            while core % (f * f) == 0:
                core //= f * f
                k *= f
            f += 1
        return cls(0, k, core)

    # field bookkeeping
    def _field(self, other: "QuadScalar") -> int:
        if self.d == other.d or other.d == 0:
            return self.d
        if self.d == 0:
            return other.d
        raise MixedField(f"cannot combine sqrt({self.d}) and sqrt({other.d})")

    @property
    def is_rational(self) -> bool:
        return self.b == 0

    def conjugate(self) -> "QuadScalar":
        return QuadScalar(self.a, -self.b, self.d)

    def norm(self) -> Fraction:
        return self.a * self.a - self.b * self.b * self.d

    # arithmetic
    def __add__(self, other):
        try:
            o = QuadScalar.coerce(other)
        except TypeError:
            return NotImplemented
        return QuadScalar(self.a + o.a, self.b + o.b, self._field(o))

    __radd__ = __add__

    def __neg__(self):
        return QuadScalar(-self.a, -self.b, self.d)

    def __pos__(self):
        return self

    def __sub__(self, other):
        try:
            o = QuadScalar.coerce(other)
        except TypeError:
            return NotImplemented
        return QuadScalar(self.a - o.a, self.b - o.b, self._field(o))

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        try:
            o = QuadScalar.coerce(other)
        except TypeError:
            return NotImplemented
        d = self._field(o)
        return QuadScalar(self.a * o.a + self.b * o.b * d, self.a * o.b + self.b * o.a, d)

    __rmul__ = __mul__

    def __truediv__(self, other):
        try:
            o = QuadScalar.coerce(other)
        except TypeError:
            return NotImplemented
        n = o.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero in Q(sqrt d)")
        num = self * o.conjugate()
        return QuadScalar(num.a / n, num.b / n, num.d)

    def __rtruediv__(self, other):
        return QuadScalar.coerce(other).__truediv__(self)

    def __abs__(self):
        return -self if self.sign() < 0 else self

    # comparisons
    def sign(self) -> int:
        sa = (self.a > 0) - (self.a < 0)
        sb = (self.b > 0) - (self.b < 0)
        if sb == 0:
            return sa
        if sa >= 0 and sb > 0:
            return 1
        if sa <= 0 and sb < 0:
            return -1
        diff = self.a * self.a - self.b * self.b * self.d
        s = (diff > 0) - (diff < 0)
        return s if sa > 0 else -s

    def _cmp(self, other) -> int:
        return (self - other).sign()

    def __eq__(self, other):
        try:
            o = QuadScalar.coerce(other)
        except TypeError:
            return NotImplemented
        return self.a == o.a and self.b == o.b

    def __hash__(self):
        if self.b == 0:
            return hash(self.a)
        return hash((self.a, self.b, self.d))

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __bool__(self):
        return self.a != 0 or self.b != 0

    def __float__(self):
        if self.b == 0:
            return float(self.a)
        root = math.sqrt(self.d)
        if (self.a >= 0) == (self.b >= 0) or self.a == 0:
            return float(self.a) + float(self.b) * root
        # a and b*sqrt(d) have opposite signs: divide the exact norm by a
        # cancellation-free denominator
        return float(self.norm()) / (float(self.a) - float(self.b) * root)

    def __floor__(self):
        if self.b == 0:
            return math.floor(self.a)
        # self = (P + Q sqrt(d)) / R with integers, R > 0
        R = self.a.denominator * self.b.denominator // math.gcd(self.a.denominator, self.b.denominator)
        P, Q = self.a.numerator * (R // self.a.denominator), self.b.numerator * (R // self.b.denominator)
        root = math.isqrt(Q * Q * self.d)
        f = (P + root) // R if Q > 0 else (P - root - 1) // R
        while self < f:
            f -= 1
        while self >= f + 1:
            f += 1
        return f

    def __repr__(self):
        return f"QuadScalar({self.a}, {self.b}, {self.d})"

    def __str__(self):
        return format_scalar(self)


def format_scalar(x: QuadScalar) -> str:
    """Canonical text form ``p/q+r/s√d`` (rational part omitted when zero)."""
    x = QuadScalar.coerce(x)
    if x.b == 0:
        return str(x.a)
    rad = f"{x.b}√{x.d}"
    if x.a == 0:
        return rad
    sign = "+" if x.b > 0 else ""
    return f"{x.a}{sign}{rad}"


_TERM = re.compile(r"([+-]?)(?:(\d+(?:/\d+)?)(?:(?:√|sqrt)(\d+))?|(?:√|sqrt)(\d+))")


def parse_scalar(text: str) -> QuadScalar:
    """Parse ``"1/2+1/3√2"``, ``"-3"``, ``"√5"``, ``"sqrt2-1"`` style scalars."""
    s = text.strip().replace(" ", "")
    pos = 0
    total = QuadScalar(0)
    while pos < len(s):
        m = _TERM.match(s, pos)
        if m is None or m.end() == pos or (pos > 0 and not m.group(1)):
            raise ParseError(f"cannot parse scalar {text!r} at column {pos + 1}")
        sign = -1 if m.group(1) == "-" else 1
        coef, rad = m.group(2), m.group(3) or m.group(4)
        c = Fraction(coef) if coef else Fraction(1)
        term = QuadScalar.sqrt(int(rad)) * c if rad else QuadScalar(c)
        total = total + term * sign
        pos = m.end()
    if not s:
        raise ParseError("empty scalar")
    return total


@dataclass(frozen=True)
class Vec2:
    """A planar vector with exact (or float) coordinates."""

    x: object
    y: object

    def __add__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x - other.x, self.y - other.y)

    def __neg__(self) -> "Vec2":
        return Vec2(-self.x, -self.y)

    def __mul__(self, k) -> "Vec2":
        return Vec2(self.x * k, self.y * k)

    __rmul__ = __mul__

    def to_float(self) -> tuple[float, float]:
        return float(self.x), float(self.y)

    def is_zero(self) -> bool:
        return not self.x and not self.y

    def __str__(self):
        return f"({self.x}, {self.y})"


def vec(x, y) -> Vec2:
    """Build an exact vector, coercing ints/Fractions/QuadScalars."""
    if isinstance(x, float) or isinstance(y, float):
        return Vec2(float(x), float(y))
    return Vec2(QuadScalar.coerce(x), QuadScalar.coerce(y))


def cross(z: Vec2, w: Vec2):
    """``Im(conj(z) * w) = z.x*w.y - z.y*w.x``, exact for exact inputs."""
    return z.x * w.y - z.y * w.x


def dot(z: Vec2, w: Vec2):
    return z.x * w.x + z.y * w.y


def sign_of(value) -> int:
    if isinstance(value, QuadScalar):
        return value.sign()
    return (value > 0) - (value < 0)


def norm(z: Vec2) -> float:
    return math.hypot(float(z.x), float(z.y))


def field_of(*values) -> int:
    """Common ``d`` of a collection of scalars (0 if all rational)."""
    d = 0
    for v in values:
        if isinstance(v, QuadScalar) and v.d:
            if d and v.d != d:
                raise MixedField(f"scalars from sqrt({d}) and sqrt({v.d})")
            d = v.d
    return d


def direction_check(z: Vec2) -> None:
    if z.is_zero():
        raise ZeroDirection("direction vector must be non-zero")


GOLDEN = QuadScalar(Fraction(1, 2), Fraction(1, 2), 5)
