import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from stochtop import _backend  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(params=sorted(_backend.BACKENDS))
def backend(request):
    """Run the test once per available kernel backend."""
    previous = _backend.name
    _backend.set_backend(request.param)
    yield request.param
    _backend.set_backend(previous)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
