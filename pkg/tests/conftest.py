import re

import numpy as np
import pytest

from hierlab.grid import PeriodicGrid, random_band_limited
from hierlab.hierarchy import build

_CRITERIA = {}
_CRIT_RE = re.compile(r"test_criterion_(\d+)_(\w+)")


@pytest.fixture(scope="session")
def grid():
    return PeriodicGrid(np.pi, 256)


@pytest.fixture(scope="session")
def tables():
    return {k: build(8, k) for k in (1, -1)}


@pytest.fixture(params=[1, -1], ids=["defocusing", "focusing"])
def kappa(request):
    return request.param


@pytest.fixture
def table(tables, kappa):
    return tables[kappa]


@pytest.fixture
def rand(grid):
    def make(seed, cutoff=12, amplitude=1.0, g=None):
        return random_band_limited(g or grid, cutoff, seed, amplitude)
    return make


def pytest_runtest_logreport(report):
    m = _CRIT_RE.search(report.nodeid)
    if not m or report.when != "call" and not (report.when == "setup" and report.failed):
        return
    key = (int(m.group(1)), m.group(2))
    ok = report.passed
    _CRITERIA[key] = _CRITERIA.get(key, True) and ok


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), ok in sorted(_CRITERIA.items()):
        terminalreporter.write_line(f"criterion {num} ({name.replace('_', ' ')}): {'PASS' if ok else 'FAIL'}")
