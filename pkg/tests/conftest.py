import numpy as np
import pytest
from hypothesis import settings

from fermibrick.gate_core import GateParams

settings.register_profile("fermibrick", deadline=None, max_examples=40)
settings.load_profile("fermibrick")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_params(rng, n, alpha=(0.2, 3.0), gamma=(-2.0, 2.0), theta=(-2.0, 2.0)):
    return [GateParams(rng.uniform(*alpha), rng.uniform(*gamma), rng.uniform(*theta)) for _ in range(n)]


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report():
    """Record and print one PASS/FAIL line per acceptance criterion."""

    def report(number, title, passed, detail, elapsed, budget):
        ok = bool(passed) and elapsed < budget
        line = (f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title} | {detail} "
                f"| {elapsed:.2f} s (limit {budget:g} s)")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
