import sys

import numpy as np
import pytest

from nonharmonic.eigensystem import ModelProblem

H_VALUES = [0.5, 1.0, 2.0]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=H_VALUES, ids=lambda h: f"h{h}")
def p1(request):
    return ModelProblem.oh1d(request.param)


@pytest.fixture
def p2():
    return ModelProblem.ohnd((2.0, 0.5))


def xcomp(x):
    """First coordinate of a point array with trailing axis d."""
    return x[..., 0]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
