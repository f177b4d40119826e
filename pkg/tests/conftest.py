from fractions import Fraction

import pytest

from codedcaching.caching import CachingConfig, FileLibrary, place

ACCEPTANCE_RESULTS: dict[str, str] = {}


def make_partition(N, K, p, F=None, mode="idealized", seed=0):
    p = Fraction(p)
    if F is None:
        F = p.denominator**K
    config = CachingConfig(N, K, p, F, mode, seed)
    lib = FileLibrary.random(N, F, seed + 1000)
    return place(config, lib), lib


@pytest.fixture
def example2():
    """N = K = 2, M/N = 1/2, one bit per subfile."""
    return make_partition(2, 2, "1/2", 4)


@pytest.fixture
def example3():
    """N = 4, K = 3, M/N = 1/4, one bit per unit."""
    return make_partition(4, 3, "1/4", 64)


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        ACCEPTANCE_RESULTS[name] = "PASS" if report.passed else "FAIL"
    elif report.failed:
        ACCEPTANCE_RESULTS[name] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in sorted(ACCEPTANCE_RESULTS.items()):
        terminalreporter.write_line(f"{status}  {name}")
