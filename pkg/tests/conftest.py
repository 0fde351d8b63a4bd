import datetime as dt

import pytest

from symptrends.series import DailySeries

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def d0():
    return dt.date(2020, 3, 2)


@pytest.fixture
def make_series(d0):
    def _make(values, start=None, label="s"):
        return DailySeries(start or d0, values, label)
    return _make


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
