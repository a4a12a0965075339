"""Shared fixtures and the acceptance-summary terminal hook."""

import pytest

from orbitglue.maps import PiecewiseLinearMap


@pytest.fixture
def doubling():
    return PiecewiseLinearMap(2.0, 2.0, 0.5)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
