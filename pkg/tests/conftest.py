import os

import numpy as np
import pytest

from glidepath import HISTORICAL, EVENSKY, OptimizerConfig

FULLSCALE = os.environ.get("GLIDEPATH_FULLSCALE") == "1"


def pytest_collection_modifyitems(config, items):
    if FULLSCALE:
        return
    skip = pytest.mark.skip(reason="full-scale run; set GLIDEPATH_FULLSCALE=1")
    for item in items:
        if "fullscale" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def hist():
    return HISTORICAL


@pytest.fixture
def evensky():
    return EVENSKY


@pytest.fixture
def dp2000():
    return OptimizerConfig(dp_precision=2000, epsilon=1e-6)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE = pytest.StashKey[dict]()


class CriterionLog:
    """Named checks for one test, also filed under a criterion number."""

    def __init__(self, table):
        self.table = table
        self.checks = []

    def __call__(self, number, name, ok, detail=""):
        row = (name, bool(ok), detail)
        self.table.setdefault(number, []).append(row)
        self.checks.append(row)
        return ok

    def failures(self):
        return [f"{name}: {detail}" for name, ok, detail in self.checks if not ok]


@pytest.fixture
def criterion(request):
    return CriterionLog(request.config.stash.setdefault(ACCEPTANCE, {}))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    table = config.stash.get(ACCEPTANCE, None)
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(table):
        checks = table[number]
        status = "PASS" if all(ok for _, ok, _ in checks) else "FAIL"
        failed = [f"{name} ({detail})" for name, ok, detail in checks if not ok]
        tail = "; failed: " + "; ".join(failed) if failed else ""
        terminalreporter.write_line(f"criterion {number}: {status} [{len(checks)} checks]{tail}")
