"""Command-line front end: ``flatnet <group> <command> [options]``.

Exit status is 0 on success, 1 on a domain error (a JSON error record is
printed on stderr) and 2 on a usage error.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import random
import sys

import click

from . import buffers, delaunay, dynamics, flow, nonergodic
from .errors import FlatnetError, MixedField, ParseError
from .quad import Vec2, parse_scalar, vec
from .surface import golden_direction, rotate_to_vertical, slit_double_cover
from .surface_file import atomic_write, format_surface, load_surface
from .trace import SurfacePoint


def resolve_threads(flag: int | None) -> int:
    """``FLATNET_THREADS`` wins over ``--threads``; the default is the CPU count."""
    env = os.environ.get("FLATNET_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise click.UsageError(f"FLATNET_THREADS must be an integer, got {env!r}") from None
    else:
        n = flag if flag is not None else (os.cpu_count() or 1)
    if n < 1:
        raise click.UsageError("thread count must be positive")
    return n


def emit(text: str, output: str | None) -> None:
    if output is None or output == "-":
        click.echo(text, nl=False)
    else:
        atomic_write(output, text)


def emit_json(data, output: str | None) -> None:
    emit(json.dumps(data, indent=2, sort_keys=True) + "\n", output)


def gnuplot_script(csv_path: str, x: str, ys: list[str], columns: list[str]) -> str:
    plots = ", ".join(f"'{csv_path}' using {columns.index(x) + 1}:{columns.index(y) + 1} with lines title '{y}'" for y in ys)
    return "\n".join(["set datafile separator ','", "set key autotitle columnhead", f"set xlabel '{x}'", f"plot {plots}", ""])


def parse_direction(text: str):
    """``vertical``, ``horizontal``, ``golden`` or ``x,y`` with exact scalars."""
    key = text.strip().lower()
    if key == "vertical":
        return vec(0, 1)
    if key == "horizontal":
        return vec(1, 0)
    if key == "golden":
        return golden_direction()
    parts = text.split(",")
    if len(parts) != 2:
        raise click.BadParameter(f"expected vertical, horizontal, golden or 'x,y', got {text!r}")
    try:
        return vec(parse_scalar(parts[0]), parse_scalar(parts[1]))
    except FlatnetError as exc:
        raise click.BadParameter(str(exc)) from None


def rotated(S, direction: Vec2):
    """``S`` turned so that ``direction`` points up; exact when the fields agree."""
    if direction.x == 0 and direction.y > 0:
        return S
    try:
        return rotate_to_vertical(S, direction)
    except MixedField:
        return rotate_to_vertical(S, direction.to_float())


def _coord(text: str) -> float:
    """A float, or an exact scalar such as ``1/3`` or ``sqrt2-1``."""
    try:
        return float(text)
    except ValueError:
        pass
    try:
        return float(parse_scalar(text.strip()))
    except ParseError:
        raise ValueError(text) from None


def parse_point(text: str) -> SurfacePoint:
    try:
        p, x, y = text.split(",")
        return SurfacePoint(int(p), _coord(x), _coord(y))
    except ValueError:
        raise click.BadParameter(f"expected 'polygon,x,y', got {text!r}") from None


def parse_arc(text: str) -> dynamics.HorizontalArc:
    try:
        p, x, y, length = text.split(",")
        return dynamics.HorizontalArc(int(p), _coord(x), _coord(y), _coord(length))
    except ValueError:
        raise click.BadParameter(f"expected 'polygon,x,y,length', got {text!r}") from None


def parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma separated numbers, got {text!r}") from None


def _f(x: float) -> str:
    return f"{x:.12g}"


class FlatnetGroup(click.Group):
    """Turns domain errors into exit status 1 with a JSON record on stderr."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except FlatnetError as exc:
            click.echo(json.dumps(exc.record(), sort_keys=True), err=True)
            ctx.exit(1)


@click.group(cls=FlatnetGroup)
@click.option("--threads", type=int, default=None, help="Worker threads (FLATNET_THREADS overrides).")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for every sampling step.")
@click.pass_context
def main(ctx, threads, seed):
    """Flat-surface geometry toolkit."""
    if not 0 <= seed < 2**64:
        raise click.BadParameter("seed must be a 64-bit unsigned integer", param_hint="--seed")
    ctx.obj = {"threads": resolve_threads(threads), "seed": seed}


# surface -------------------------------------------------------------------


@main.group()
def surface():
    """Read, check and generate surface files."""


@surface.command("validate")
@click.argument("path")
@click.option("--output", default=None, help="Report path (default stdout).")
def surface_validate(path, output):
    """Parse a surface file and report its invariants."""
    S = load_surface(path)
    emit_json(
        {
            "name": S.name,
            "field": S.field,
            "polygons": len(S.polygons),
            "genus": S.genus,
            "r": S.num_zeros,
            "true_zeros": S.num_true_zeros,
            "area": S.float_area,
            "cone_angles_over_2pi": [s.order for s in S.singularities],
            "nu_delaunay": S.nu_delaunay,
            "nu_strip": S.nu_strip,
        },
        output,
    )


@surface.command("make-slit-cover")
@click.option("--lambda", "lam", required=True, help="Slit endpoint, an exact scalar in (0, 1).")
@click.option("--normalize", is_flag=True, help="Rescale to unit area.")
@click.option("--output", default=None, help="Surface file path (default stdout).")
def surface_make_slit_cover(lam, normalize, output):
    """Write the double cover of the square torus branched over a horizontal slit."""
    S = slit_double_cover(parse_scalar(lam))
    emit(format_surface(S.normalized() if normalize else S), output)


# flow ----------------------------------------------------------------------


@main.group("flow")
def flow_group():
    """Systole traces and divergence-rate checks along the geodesic flow."""


def _profile(eps, C, c, c_prime, h0):
    return flow.DivergenceProfile(eps=eps, C=C, c=c, c_prime=c_prime, h0=h0)


_profile_options = [
    click.option("--eps", type=float, default=0.0, show_default=True),
    click.option("--C", "C", type=float, default=1.0, show_default=True),
    click.option("--c", "c", type=float, default=0.5, show_default=True),
    click.option("--c-prime", type=float, default=0.2, show_default=True),
    click.option("--h0", type=float, default=0.1, show_default=True),
]


def profile_options(fn):
    for opt in reversed(_profile_options):
        fn = opt(fn)
    return fn


@flow_group.command("trace")
@click.option("--surface", "surface_spec", required=True, help="Surface file or generator (torus, slit:<λ>).")
@click.option("--dir", "direction", default="vertical", show_default=True, help="Flow direction.")
@click.option("--t", "grid", required=True, help="start:stop:step or a comma separated list.")
@click.option("--budget", type=int, default=flow.DEFAULT_BUDGET, show_default=True)
@click.option("--output", default=None, help="CSV path (default stdout).")
@click.option("--gnuplot", default=None, help="Also write a gnuplot script plotting d against t.")
def flow_trace(surface_spec, direction, grid, budget, output, gnuplot):
    """CSV of the systole and d(t) on a time grid."""
    S = rotated(load_surface(surface_spec), parse_direction(direction))
    text = flow.trace_csv(flow.d_trace(S, flow.parse_grid(grid), budget))
    emit(text, output)
    if gnuplot:
        cols = ["t", "ell", "d", "witness_hx", "witness_hy"]
        atomic_write(gnuplot, gnuplot_script(output or "trace.csv", "t", ["d"], cols))


@flow_group.command("check-c")
@click.option("--surface", "surface_spec", required=True)
@click.option("--dir", "direction", default="vertical", show_default=True)
@profile_options
@click.option("--vmax", type=float, default=100.0, show_default=True)
@click.option("--output", default=None)
def flow_check_c(surface_spec, direction, eps, C, c, c_prime, h0, vmax, output):
    """Check the saddle-connection form of the rate condition up to a vertical bound."""
    S = rotated(load_surface(surface_spec), parse_direction(direction))
    rep = flow.check_condition_c(S, _profile(eps, C, c, c_prime, h0), vmax)
    emit_json(
        {
            "passed": rep.passed,
            "V_max": vmax,
            "checked": len(rep.rows),
            "min_product": rep.min_product() if rep.rows else None,
            "violations": [r.__dict__ for r in rep.violations],
            "rows": [r.__dict__ for r in rep.rows],
        },
        output,
    )


@flow_group.command("equiv")
@click.option("--surface", "surface_spec", required=True)
@click.option("--dir", "direction", default="vertical", show_default=True)
@profile_options
@click.option("--t", "grid", default="0:20:0.5", show_default=True)
@click.option("--vmax", type=float, default=100.0, show_default=True)
@click.option("--output", default=None)
def flow_equiv(surface_spec, direction, eps, C, c, c_prime, h0, grid, vmax, output):
    """Evaluate the d(t) and systole forms of the rate condition side by side."""
    S = rotated(load_surface(surface_spec), parse_direction(direction))
    rep = flow.equivalence_probe(S, _profile(eps, C, c, c_prime, h0), flow.parse_grid(grid), vmax)
    cc = rep.condition_c
    emit_json(
        {
            "a_holds": rep.a_holds,
            "b_holds": rep.b_holds,
            "consistent": rep.consistent,
            "C_inf": rep.C_inf,
            "c_sup": rep.c_sup,
            "condition_c": None if cc is None else {"passed": cc.passed, "checked": len(cc.rows)},
        },
        output,
    )


# delaunay ------------------------------------------------------------------


@main.group("delaunay")
def delaunay_group():
    """Delaunay triangulations and square networks."""


@delaunay_group.command("triangulate")
@click.option("--surface", "surface_spec", required=True)
@click.option("--output", default=None)
def delaunay_triangulate(surface_spec, output):
    """Report the Delaunay triangulation: counts, edges and circumradii."""
    S = load_surface(surface_spec)
    dt = delaunay.delaunay_triangulation(S)
    emit_json(
        {
            "triangles": len(dt.triangles),
            "edges": len(dt.edges),
            "nu_delaunay": dt.nu,
            "flips": dt.flips,
            "cocircular": dt.cocircular,
            "empty_disk_violations": dt.empty_disk_violations(),
            "shortest_edge": dt.shortest_edge(),
            "edge_holonomies": [str(e.holonomy) for e in dt.edges],
            "circumradii": [round(tri.radius, 12) for tri in dt.triangles],
        },
        output,
    )


@delaunay_group.command("network")
@click.option("--surface", "surface_spec", required=True)
@click.option("--delta", required=True, help="Square size parameter, an exact scalar.")
@click.option("--samples", type=int, default=1000, show_default=True, help="Coverage sample size.")
@click.option("--max-edge", type=float, default=None, help="Reject Delaunay edges longer than this.")
@click.option("--output", default=None)
@click.pass_context
def delaunay_network(ctx, surface_spec, delta, samples, max_edge, output):
    """Build the square network and report squares, adjacency and coverage."""
    S = load_surface(surface_spec)
    g = delaunay.build_one_network(S, parse_scalar(delta), samples=samples, seed=ctx.obj["seed"], max_edge=max_edge)
    emit(g.report_text(), output)


# dynamics ------------------------------------------------------------------


@main.group("dynamics")
def dynamics_group():
    """First-return maps and ergodic averages of straight-line flows."""


_arc_help = "Horizontal arc 'polygon,x,y,length'."


@dynamics_group.command("iet")
@click.option("--surface", "surface_spec", required=True)
@click.option("--arc", required=True, help=_arc_help)
@click.option("--dir", "direction", default="vertical", show_default=True)
@click.option("--output", default=None)
def dynamics_iet(surface_spec, arc, direction, output):
    """CSV of the first-return interval exchange to an arc."""
    S = load_surface(surface_spec)
    T = dynamics.first_return_iet(S, parse_arc(arc), direction=parse_direction(direction).to_float())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["interval", "start", "length", "translation", "return_time", "image"])
    perm = T.permutation
    for k in range(len(T.starts)):
        w.writerow([k, _f(T.starts[k]), _f(T.lengths[k]), _f(T.translations[k]), _f(T.return_times[k]), perm[k]])
    emit(buf.getvalue(), output)


@dynamics_group.command("average")
@click.option("--surface", "surface_spec", required=True)
@click.option("--arc", required=True, help=_arc_help)
@click.option("--start", required=True, help="Start point 'polygon,x,y'.")
@click.option("--T", "T", type=float, required=True)
@click.option("--dir", "direction", default="vertical", show_default=True)
@click.option("--output", default=None)
def dynamics_average(surface_spec, arc, start, T, direction, output):
    """Crossing frequency of one trajectory through an arc."""
    S = load_surface(surface_spec)
    res = dynamics.ergodic_average(S, parse_point(start), parse_arc(arc), T, direction=parse_direction(direction).to_float())
    emit_json(res.__dict__, output)


@dynamics_group.command("probe")
@click.option("--surface", "surface_spec", required=True)
@click.option("--arc", required=True, help=_arc_help)
@click.option("--starts", default=None, help="Start points 'p,x,y;p,x,y;...'.")
@click.option("--random-starts", type=int, default=8, show_default=True, help="Seeded random starts if --starts is absent.")
@click.option("--T", "T", type=float, required=True)
@click.option("--horizons", default="1,2", show_default=True, help="Multiples of T to report.")
@click.option("--dir", "direction", default="vertical", show_default=True)
@click.option("--output", default=None)
@click.pass_context
def dynamics_probe(ctx, surface_spec, arc, starts, random_starts, T, horizons, direction, output):
    """Averages from several starts and their pairwise deviation per horizon."""
    S = load_surface(surface_spec)
    if starts:
        pts = [parse_point(s) for s in starts.split(";") if s.strip()]
    else:
        pts = random_points(S, random_starts, ctx.obj["seed"])
    rep = dynamics.unique_ergodicity_probe(
        S, parse_arc(arc), pts, T, direction=parse_direction(direction).to_float(), horizons=tuple(parse_floats(horizons))
    )
    emit(rep.to_csv(), output)


def random_points(S, n: int, seed: int) -> list[SurfacePoint]:
    """``n`` area-uniform points, chosen by rejection in each polygon's bounding box."""
    rng = random.Random(seed)
    polys = [[v.to_float() for v in poly] for poly in S.polygons]
    areas = [abs(_shoelace(p)) for p in polys]
    out = []
    while len(out) < n:
        k = rng.choices(range(len(polys)), weights=areas)[0]
        xs, ys = zip(*polys[k])
        x, y = rng.uniform(min(xs), max(xs)), rng.uniform(min(ys), max(ys))
        if _inside(polys[k], x, y):
            out.append(SurfacePoint(k, x, y))
    return out


def _shoelace(p) -> float:
    return 0.5 * sum(a[0] * b[1] - b[0] * a[1] for a, b in zip(p, p[1:] + p[:1]))


def _inside(p, x, y) -> bool:
    return all((b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0]) > 0 for a, b in zip(p, p[1:] + p[:1]))


# buffers -------------------------------------------------------------------


@main.group("buffers")
def buffers_group():
    """Strip decompositions, buffered squares and spacing sequences."""


@buffers_group.command("strips")
@click.option("--surface", "surface_spec", required=True)
@click.option("--gamma", required=True, help="Saddle connection holonomy 'x,y' in polygon units (exact scalars).")
@click.option("--dir", "direction", default="vertical", show_default=True)
@click.option("--output", default=None)
def buffers_strips(surface_spec, gamma, direction, output):
    """CSV of the strips swept by the flow from a saddle connection."""
    S = load_surface(surface_spec)
    strips = buffers.vertical_strips(S, parse_direction(gamma), direction=parse_direction(direction).to_float())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["strip", "start", "length", "width", "height", "area", "translation"])
    for s in strips:
        w.writerow([s.index, _f(s.start), _f(s.length), _f(s.width), _f(s.height), _f(s.area), _f(s.translation)])
    emit(buf.getvalue(), output)


@buffers_group.command("buffer")
@click.option("--surface", "surface_spec", required=True)
@click.option("--gamma", required=True, help="Saddle connection holonomy 'x,y' in polygon units (exact scalars).")
@click.option("--delta", type=float, required=True)
@click.option("--strip", "strip_index", type=int, default=None, help="Strip to buffer (default: largest).")
@click.option("--dir", "direction", default="vertical", show_default=True)
@click.option("--output", default=None)
def buffers_buffer(surface_spec, gamma, delta, strip_index, direction, output):
    """Buffered square from a strip: buffer size, overlap and the product test."""
    S = load_surface(surface_spec)
    strips = buffers.vertical_strips(S, parse_direction(gamma), direction=parse_direction(direction).to_float())
    if strip_index is None:
        strip = max(strips, key=lambda s: (s.area, -s.index))
    elif 0 <= strip_index < len(strips):
        strip = strips[strip_index]
    else:
        raise click.BadParameter(f"no strip {strip_index}; there are {len(strips)}", param_hint="--strip")
    B = buffers.buffered_square_from_strip(S, strip, delta)
    emit_json(
        {
            "strip": strip.index,
            "square_side": B.square.width,
            "buffer_width": B.buffer.width,
            "buffer_height": B.buffer.height,
            "overlap": B.overlap,
            "product": B.product,
            "delta": delta,
            "satisfies": B.satisfies(),
        },
        output,
    )


@buffers_group.command("spacing")
@click.option("--t0", type=float, required=True)
@click.option("--eps", type=float, required=True)
@click.option("--N", "N", type=int, required=True)
@click.option("--output", default=None)
@click.option("--gnuplot", default=None, help="Also write a gnuplot script plotting C_n against n.")
def buffers_spacing(t0, eps, N, output, gnuplot):
    """CSV of the time sequence with n, t_n, gap and the growth ratio."""
    emit(buffers.spacing_sequence(t0, eps, N).to_csv(), output)
    if gnuplot:
        atomic_write(gnuplot, gnuplot_script(output or "spacing.csv", "n", ["C_n"], ["n", "t_n", "gap", "C_n"]))


@buffers_group.command("pz")
@click.option("--c", "c", type=float, default=1.0, show_default=True)
@click.option("--eps", type=float, default=1.0, show_default=True)
@click.option("--t0", type=float, default=2.0, show_default=True)
@click.option("--N", "N", type=int, default=6, show_default=True)
@click.option("--alpha", type=float, default=(math.sqrt(5) - 1) / 2, show_default=True)
@click.option("--K", "K", type=float, default=None, help="Overlap constant (default from --c and --delta).")
@click.option("--delta", type=float, default=0.2, show_default=True)
@click.option("--output", default=None)
def buffers_pz(c, eps, t0, N, alpha, K, delta, output):
    """Pairwise-overlap report for a family of pulled-back squares."""
    sets, nominal, _ = buffers.pullback_family(c, eps, t0, N, alpha)
    K = buffers.overlap_constant(c, delta) if K is None else K
    emit(buffers.pz_overlap_check(sets, K, nominal=nominal).to_text(), output)


# nonergodic ----------------------------------------------------------------


@main.group("nonergodic")
def nonergodic_group():
    """Construction of nonergodic directions on the slit cover."""


def _write_certificate(S, state, rfun, output):
    cert = nonergodic.liminf_certificate(S, state, r=rfun)
    emit(cert.to_csv(), output)
    return cert


@nonergodic_group.command("generate")
@click.option("--lambda", "lam", required=True, help="Slit endpoint, an exact scalar.")
@click.option("--budget", required=True, help="Cross-product budgets: '2^-j', 'c*b^-j' or a list.")
@click.option("--J", "J", type=int, required=True, help="Number of steps.")
@click.option("--rfun", type=click.Choice(["loglog", "log", "sqrtlog", "t"]), default="loglog", show_default=True)
@click.option("--growth", default="2", show_default=True, help="Growth factor, or one per step.")
@click.option("--state-output", default="state.json", show_default=True, help="Construction state path.")
@click.option("--output", default=None, help="Certificate CSV path (default stdout).")
def nonergodic_generate(lam, budget, J, rfun, growth, state_output, output):
    """Run the construction, save its state and print the liminf certificate."""
    lam_v = parse_scalar(lam)
    g = parse_floats(growth)
    state = nonergodic.construct_sequence(lam_v, nonergodic.parse_budgets(budget), J, growth=g[0] if len(g) == 1 else g)
    atomic_write(state_output, state.to_json())
    _write_certificate(slit_double_cover(lam_v), state, rfun, output)


def _load_state(path):
    if not os.path.exists(path):
        raise FlatnetError(f"state file {path!r} not found", path=path)
    with open(path, encoding="utf-8") as fh:
        return nonergodic.ConstructionState.from_json(fh.read())


@nonergodic_group.command("certify")
@click.option("--state", "state_path", required=True)
@click.option("--rfun", type=click.Choice(["loglog", "log", "sqrtlog", "t"]), default="loglog", show_default=True)
@click.option("--output", default=None)
def nonergodic_certify(state_path, rfun, output):
    """Recompute the liminf certificate from a saved state."""
    state = _load_state(state_path)
    _write_certificate(slit_double_cover(state.lam), state, rfun, output)


@nonergodic_group.command("evidence")
@click.option("--state", "state_path", required=True)
@click.option("--T", "T", type=float, default=1e4, show_default=True)
@click.option("--starts", type=int, default=4, show_default=True, help="Starts per half.")
@click.option("--horizons", default="1,2", show_default=True)
@click.option("--output", default=None)
@click.pass_context
def nonergodic_evidence(ctx, state_path, T, starts, horizons, output):
    """CSV of crossing averages from both halves of the partition."""
    state = _load_state(state_path)
    S = slit_double_cover(state.lam)
    rep = nonergodic.nonergodicity_evidence(
        S, state, T, starts_per_half=starts, horizons=tuple(parse_floats(horizons)), seed=ctx.obj["seed"]
    )
    emit(rep.to_csv(), output)


if __name__ == "__main__":
    sys.exit(main())
