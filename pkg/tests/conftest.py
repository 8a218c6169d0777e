import pytest

from relayfl.harness import random_instance
from relayfl.topology import Device, Point2D


def hand_device(id, d, r, h=1.0, j=1.0, budget=5.0):
    return Device(id=id, position=Point2D(1.0, 1.0), total_budget=budget, d=d, r=r, h_mag2=h, j_mag2=j)


@pytest.fixture
def instances():
    """Factory of reproducible random single-round instances."""
    def make(n, k_max=8, seed=0, params=None):
        return [random_instance([seed, i], k_max, params) for i in range(n)]
    return make


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
