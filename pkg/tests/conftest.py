from __future__ import annotations

import pytest

from wgfrac.core import Grid


@pytest.fixture
def unit_grid():
    return Grid(0.0, 1.0, 128)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
