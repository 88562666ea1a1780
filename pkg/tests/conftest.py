import pytest

from flatnet.quad import parse_scalar
from flatnet.surface import golden_direction, rotate_to_vertical, slit_double_cover, square_torus

LAM = parse_scalar("sqrt2-1")


@pytest.fixture
def torus():
    return square_torus()


@pytest.fixture
def slit():
    return slit_double_cover(LAM)


@pytest.fixture
def golden_torus():
    # slope-phi leaves become vertical
    return rotate_to_vertical(square_torus(), golden_direction())


def pytest_terminal_summary(terminalreporter):
    lines = []
    for reports in terminalreporter.stats.values():
        for rep in reports:
            if getattr(rep, "when", None) != "call":
                continue
            lines += [value for key, value in getattr(rep, "user_properties", []) if key == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
