import pytest

from gridplan.grid_map import Barrier, GridMap

ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture
def record_criterion():
    """Register the outcome of one numbered acceptance criterion for the summary."""

    def record(number: int, title: str, passed: bool, detail: str = "") -> None:
        ACCEPTANCE[number] = (title, bool(passed), detail)
        print(f"[criterion {number}] {'PASS' if passed else 'FAIL'}: {title} {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"{number:>2}. {'PASS' if passed else 'FAIL'}  {title}  {detail}")


def hbar(y, lo, hi):
    return Barrier("horizontal", y, lo, hi)


def vbar(x, lo, hi):
    return Barrier("vertical", x, lo, hi)


@pytest.fixture
def wall_map():
    # a vertical wall with a gap at the top, forcing a detour
    return GridMap(20, (vbar(10, 0, 16),), "random", 0)
