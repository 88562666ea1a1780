import csv
import io
import json
import math
import os

import pytest
from click.testing import CliRunner

from flatnet.cli import main, resolve_threads
from flatnet.surface import square_torus
from flatnet.surface_file import format_surface

MIXED = "d = 2\npolygon (0, 0) (1, 0) (1, 1+√2) (0, 1)\npolygon (0, 0) (1, 0) (1, 1/2+√3) (0, 1)\n"

# one quick invocation per subcommand; the workdir holds torus.surf, slit.surf and state.json
COMMANDS = [
    ["surface", "validate", "torus.surf"],
    ["surface", "validate", "slit.surf"],
    ["surface", "make-slit-cover", "--lambda", "sqrt2-1", "--normalize"],
    ["flow", "trace", "--surface", "slit.surf", "--dir", "golden", "--t", "0:40:0.1"],
    ["flow", "check-c", "--surface", "torus.surf", "--dir", "golden"],
    ["flow", "equiv", "--surface", "torus.surf", "--dir", "golden", "--t", "0:10:0.5"],
    ["delaunay", "triangulate", "--surface", "slit.surf"],
    ["delaunay", "network", "--surface", "torus.surf", "--delta", "3/10", "--samples", "200"],
    ["dynamics", "iet", "--surface", "slit.surf", "--arc", "0,0,0,1", "--dir", "golden"],
    ["dynamics", "average", "--surface", "torus.surf", "--arc", "0,0,0,1/2", "--start", "0,1/3,1/7", "--T", "1000", "--dir", "golden"],
    ["dynamics", "probe", "--surface", "slit.surf", "--arc", "0,0,0,1", "--random-starts", "3", "--T", "500", "--dir", "golden"],
    ["buffers", "strips", "--surface", "slit.surf", "--gamma", "sqrt2-1,0", "--dir", "golden"],
    ["buffers", "buffer", "--surface", "slit.surf", "--gamma", "sqrt2-1,0", "--delta", "0.2", "--dir", "golden"],
    ["buffers", "spacing", "--t0", "10", "--eps", "1", "--N", "100"],
    ["buffers", "pz"],
    ["nonergodic", "certify", "--state", "state.json"],
    ["nonergodic", "evidence", "--state", "state.json", "--T", "500", "--starts", "2"],
]


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    (root / "torus.surf").write_text(format_surface(square_torus()))
    runner = CliRunner()
    res = runner.invoke(main, ["surface", "make-slit-cover", "--lambda", "sqrt2-1", "--output", str(root / "slit.surf")])
    assert res.exit_code == 0, res.output
    res = runner.invoke(main, ["nonergodic", "generate", "--lambda", "sqrt2-1", "--budget", "2^-j", "--J", "5",
                               "--state-output", str(root / "state.json"), "--output", str(root / "cert.csv")])
    assert res.exit_code == 0, res.output
    return root


def run(workdir, args, seed=7):
    old = os.getcwd()
    os.chdir(workdir)
    try:
        return CliRunner().invoke(main, ["--seed", str(seed), *args])
    finally:
        os.chdir(old)


def numbers(text):
    """Every numeric value in a CSV or JSON document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        out = []
        for row in csv.reader(io.StringIO(text)):
            for cell in row:
                try:
                    out.append(float(cell))
                except ValueError:
                    pass
        return out
    out = []
    stack = [doc]
    while stack:
        x = stack.pop()
        if isinstance(x, dict):
            stack.extend(x.values())
        elif isinstance(x, list):
            stack.extend(x)
        elif isinstance(x, (int, float)) and not isinstance(x, bool):
            out.append(float(x))
    return out


def test_validate_torus_reports_invariants(workdir):
    res = run(workdir, ["surface", "validate", "torus.surf"])
    assert res.exit_code == 0
    rep = json.loads(res.output)
    assert (rep["genus"], rep["r"], rep["area"]) == (1, 1, 1.0)


def test_trace_row_count(workdir):
    res = run(workdir, ["flow", "trace", "--surface", "slit.surf", "--dir", "golden", "--t", "0:40:0.1"])
    assert res.exit_code == 0
    rows = list(csv.reader(io.StringIO(res.output)))
    assert len(rows) == 402 and len(rows[1:]) == 401


def test_generate_writes_state_and_five_rows(workdir):
    rows = list(csv.DictReader(open(workdir / "cert.csv")))
    assert len(rows) == 5
    assert all(math.isfinite(float(r["ratio"])) for r in rows)
    state = json.loads((workdir / "state.json").read_text())
    assert state


@pytest.mark.parametrize("args", COMMANDS, ids=lambda a: " ".join(a[:2]))
def test_reruns_identical_and_finite(workdir, args):
    first = run(workdir, args)
    assert first.exit_code == 0, first.output
    second = run(workdir, args)
    assert first.output == second.output
    if args[1] == "make-slit-cover":
        assert first.output.startswith("d = 2\n")
        return
    vals = numbers(first.output)
    assert vals and all(math.isfinite(v) for v in vals)


def test_generate_reruns_identical(workdir, tmp_path):
    outs = []
    for k in range(2):
        res = run(workdir, ["nonergodic", "generate", "--lambda", "sqrt2-1", "--budget", "2^-j", "--J", "5",
                            "--state-output", str(tmp_path / f"s{k}.json"), "--output", str(tmp_path / f"c{k}.csv")])
        assert res.exit_code == 0
        outs.append(((tmp_path / f"s{k}.json").read_bytes(), (tmp_path / f"c{k}.csv").read_bytes()))
    assert outs[0] == outs[1]


def test_seed_changes_sampling(workdir):
    args = ["dynamics", "probe", "--surface", "slit.surf", "--arc", "0,0,0,1", "--random-starts", "3", "--T", "200"]
    assert run(workdir, args, seed=7).output != run(workdir, args, seed=8).output


def test_missing_file_is_domain_error(workdir):
    res = run(workdir, ["surface", "validate", "nope.surf"])
    assert res.exit_code == 1
    rec = json.loads(res.stderr)
    assert "error" in rec and "message" in rec


def test_field_mismatch_is_domain_error(workdir):
    (workdir / "mixed.surf").write_text(MIXED)
    res = run(workdir, ["surface", "validate", "mixed.surf"])
    assert res.exit_code == 1
    assert json.loads(res.stderr)["error"] == "FieldMismatch"


def test_usage_errors_exit_two(workdir):
    assert run(workdir, ["flow", "trace", "--surface", "torus.surf"]).exit_code == 2
    assert run(workdir, ["dynamics", "average", "--surface", "torus.surf", "--arc", "0,0,0,x",
                         "--start", "0,0.1,0.1", "--T", "10"]).exit_code == 2
    assert run(workdir, ["no-such-group"]).exit_code == 2
    assert CliRunner().invoke(main, ["--seed", "-1", "buffers", "pz"]).exit_code == 2


def test_output_file_matches_stdout(workdir, tmp_path):
    args = ["buffers", "spacing", "--t0", "10", "--eps", "1", "--N", "20"]
    stdout = run(workdir, args).output
    assert run(workdir, [*args, "--output", str(tmp_path / "s.csv")]).exit_code == 0
    assert (tmp_path / "s.csv").read_text() == stdout


def test_gnuplot_script_names_the_csv(workdir, tmp_path):
    csv_path, gp = tmp_path / "trace.csv", tmp_path / "trace.gp"
    res = run(workdir, ["flow", "trace", "--surface", "torus.surf", "--t", "0:2:0.5",
                        "--output", str(csv_path), "--gnuplot", str(gp)])
    assert res.exit_code == 0
    script = gp.read_text()
    assert str(csv_path) in script and script.startswith("set datafile separator ','")


def test_thread_resolution(monkeypatch):
    monkeypatch.delenv("FLATNET_THREADS", raising=False)
    assert resolve_threads(3) == 3
    assert resolve_threads(None) >= 1
    monkeypatch.setenv("FLATNET_THREADS", "5")
    assert resolve_threads(3) == 5


def test_bad_thread_env_is_usage_error(workdir, monkeypatch):
    monkeypatch.setenv("FLATNET_THREADS", "many")
    assert run(workdir, ["buffers", "pz"]).exit_code == 2
    monkeypatch.setenv("FLATNET_THREADS", "0")
    assert run(workdir, ["buffers", "pz"]).exit_code == 2
