import numpy as np
import pytest

from convexpoincare.measures import DiscreteMeasure


@pytest.fixture
def bern():
    return DiscreteMeasure.bernoulli(0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
