from __future__ import annotations

import pytest

from ospcheck.config import PhysicalParams, RenormConstants
from ospcheck.greens import EnvelopeEvaluator

# filled by the acceptance suite, echoed in the terminal summary
CRITERIA_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def zero_constants():
    return RenormConstants()


@pytest.fixture
def evaluator_at():
    def make(lam, mass=1.0, constants=None, n_max=13):
        return EnvelopeEvaluator.create(PhysicalParams(lam, mass), constants or RenormConstants(), n_max)

    return make
