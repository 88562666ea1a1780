"""Exact translation-surface geometry: systoles along the geodesic flow, Delaunay
square networks, strip buffers, straight-line dynamics and nonergodic directions."""

from .errors import FlatnetError
from .quad import QuadScalar, Vec2, parse_scalar, vec
from .surface import TranslationSurface, build_surface, slit_double_cover, square_torus
from .surface_file import format_surface, load_surface, parse_surface

__all__ = [
    "FlatnetError",
    "QuadScalar",
    "TranslationSurface",
    "Vec2",
    "build_surface",
    "format_surface",
    "load_surface",
    "parse_scalar",
    "parse_surface",
    "slit_double_cover",
    "square_torus",
    "vec",
]
