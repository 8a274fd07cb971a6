import csv
import sys
from pathlib import Path

import pytest

from fraxopt import head_and_neck
from fraxopt import experiments

DATA = Path(__file__).parent / "data"


def load_rows(name):
    with open(DATA / name, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def hn():
    return head_and_neck(t_lag=7, t_double=2)


@pytest.fixture(scope="session")
def full_sweep():
    """Price sweep over the full reference grid, keyed by (t_lag, t_double, delta)."""
    cells = experiments.run_price_sweep(head_and_neck())
    return {(c.t_lag, c.t_double, c.delta): c for c in cells}


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[key])
