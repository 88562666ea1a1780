"""Text format for translation surfaces.

Example::

    # unit square torus
    d = 0
    polygon (0, 0) (1, 0) (1, 1) (0, 1)
    glue (0, 0) (0, 2)
    glue (0, 1) (0, 3)

``d`` is the square-free radicand shared by every scalar (0 for rational
surfaces).  Scalars are written ``p/q+r/s√d``; ``sqrtd`` is accepted for
``√d``.  Optional ``scale = <float>`` and ``name = <text>`` lines may follow
the header.  Blank lines and ``#`` comments are ignored.
"""

from __future__ import annotations

import os
import re
import tempfile

from .errors import FieldMismatch, FlatnetError, ParseError
from .quad import QuadScalar, Vec2, format_scalar, parse_scalar
from .surface import TranslationSurface, build_surface, slit_double_cover, square_torus

_HEADER = re.compile(r"(d|scale|name)\s*=")
_PAIR = re.compile(r"\(\s*([^,()]+?)\s*,\s*([^,()]+?)\s*\)")


def _err(msg: str, line: int, col: int, cls=ParseError):
    return cls(f"line {line}, column {col}: {msg}", line=line, column=col)


def _scalar(tok: str, line: int, col: int, d: int) -> QuadScalar:
    try:
        x = parse_scalar(tok)
    except (ParseError, ValueError) as exc:
        raise _err(f"bad scalar {tok!r} ({exc})", line, col) from None
    if x.d and x.d != d:
        raise _err(f"scalar {tok!r} lies in Q(√{x.d}) but the header says d = {d}", line, col, FieldMismatch)
    return x


def _pairs(body: str, line: int, offset: int):
    """Parenthesised pairs in ``body``, with their column numbers; anything else is an error."""
    out = []
    pos = 0
    while pos < len(body):
        if body[pos].isspace():
            pos += 1
            continue
        m = _PAIR.match(body, pos)
        if m is None:
            raise _err("expected '(x, y)'", line, offset + pos + 1)
        out.append((m.group(1), m.group(2), offset + m.start(1) + 1, offset + m.start(2) + 1))
        pos = m.end()
    return out


def parse_surface(text: str) -> TranslationSurface:
    """Parse the surface format; raises :class:`ParseError` with line and column on bad input."""
    d = None
    scale = 1.0
    name = ""
    polygons, gluings = [], []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        stripped = line.strip()
        key, _, rest = stripped.partition(" ")
        col0 = indent + len(key) + 2
        if _HEADER.match(stripped):
            k, _, v = stripped.partition("=")
            k, v = k.strip(), v.strip()
            vcol = indent + stripped.index("=") + 2
            if k == "d":
                if d is not None:
                    raise _err("duplicate d header", ln, indent + 1)
                if polygons:
                    raise _err("d must precede the polygons", ln, indent + 1)
                try:
                    d = int(v)
                except ValueError:
                    raise _err(f"d must be an integer, got {v!r}", ln, vcol) from None
                if d < 0 or d == 1:
                    raise _err("d must be 0 or a square-free integer > 1", ln, vcol)
                try:
                    QuadScalar.sqrt(d) if d else None
                    if d:
                        QuadScalar(0, 1, d)
                except ValueError:
                    raise _err(f"d = {d} is not square-free", ln, vcol) from None
            elif k == "scale":
                try:
                    scale = float(v)
                except ValueError:
                    raise _err(f"scale must be a number, got {v!r}", ln, vcol) from None
                if not scale > 0:
                    raise _err("scale must be positive", ln, vcol)
            else:
                name = v
            continue
        if d is None:
            raise _err("missing 'd = <integer>' header", ln, indent + 1)
        if key == "polygon":
            pts = _pairs(rest, ln, col0 - 1)
            if len(pts) < 3:
                raise _err("a polygon needs at least three vertices", ln, indent + 1)
            polygons.append([Vec2(_scalar(x, ln, cx, d), _scalar(y, ln, cy, d)) for x, y, cx, cy in pts])
        elif key == "glue":
            pts = _pairs(rest, ln, col0 - 1)
            if len(pts) != 2:
                raise _err("glue needs two (polygon, edge) pairs", ln, indent + 1)
            edges = []
            for a, b, ca, cb in pts:
                try:
                    edges.append((int(a), int(b)))
                except ValueError:
                    raise _err(f"edge index must be integers, got ({a}, {b})", ln, ca) from None
            gluings.append(tuple(edges))
        else:
            raise _err(f"unknown directive {key!r}", ln, indent + 1)
    if d is None:
        raise ParseError("missing 'd = <integer>' header", line=0, column=0)
    if not polygons:
        raise ParseError("no polygons", line=0, column=0)
    return build_surface(polygons, gluings, scale=scale, name=name)


def format_surface(S: TranslationSurface) -> str:
    """Canonical text of ``S``; ``parse_surface(format_surface(S))`` rebuilds it exactly."""
    lines = [f"d = {S.field}"]
    if S.scale != 1.0:
        lines.append(f"scale = {S.scale!r}")
    if S.name:
        lines.append(f"name = {S.name}")
    for poly in S.polygons:
        pts = " ".join(f"({format_scalar(QuadScalar.coerce(v.x))}, {format_scalar(QuadScalar.coerce(v.y))})" for v in poly)
        lines.append(f"polygon {pts}")
    seen = set()
    for a in sorted(S.gluings):
        b = S.gluings[a]
        if a in seen:
            continue
        seen.update((a, b))
        lines.append(f"glue ({a[0]}, {a[1]}) ({b[0]}, {b[1]})")
    return "\n".join(lines) + "\n"


def read_surface(path: str) -> TranslationSurface:
    with open(path, encoding="utf-8") as fh:
        return parse_surface(fh.read())


def atomic_write(path: str, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file in the same directory and a rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_surface(S: TranslationSurface, path: str) -> None:
    atomic_write(path, format_surface(S))


def load_surface(spec: str) -> TranslationSurface:
    """A surface from a file path or a generator: ``torus``, ``slit:<λ>``, ``slit-normalized:<λ>``."""
    if spec == "torus":
        return square_torus()
    if spec.startswith("slit:") or spec.startswith("slit-normalized:"):
        kind, _, lam = spec.partition(":")
        S = slit_double_cover(parse_scalar(lam))
        return S.normalized() if kind == "slit-normalized" else S
    if not os.path.exists(spec):
        raise FlatnetError(f"surface file {spec!r} not found", path=spec)
    return read_surface(spec)
