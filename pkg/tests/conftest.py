from fractions import Fraction
from math import comb

import pytest


def rational_tail(n: int, p: Fraction, m: int) -> Fraction:
    """P(Bin(n, p) > m) in exact rational arithmetic."""
    return sum((comb(n, j) * p**j * (1 - p) ** (n - j) for j in range(m + 1, n + 1)), Fraction(0))


@pytest.fixture
def out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("FLEETQ_OUTPUT_DIR", str(tmp_path))
    return tmp_path


_GATE: dict[int, str] = {}


@pytest.fixture(scope="session")
def gate():
    """Record one verdict line per acceptance criterion."""

    def record(number: int, ok: bool, detail: str) -> bool:
        _GATE[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(_GATE[number])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _GATE:
        terminalreporter.section("acceptance gate")
        for n in sorted(_GATE):
            terminalreporter.write_line(_GATE[n])
