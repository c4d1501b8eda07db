import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERION_LINES = []


def pytest_runtest_logreport(report):
    if report.when == "call":
        _CRITERION_LINES.extend(v for k, v in report.user_properties if k == "criterion")


def pytest_terminal_summary(terminalreporter):
    if _CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERION_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
