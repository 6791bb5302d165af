import numpy as np
import pytest

from memrc.memristor import DeviceSet
from memrc.netlist import NetworkTopology


@pytest.fixture
def two_node():
    """Smallest legal circuit: one memristor and one source across nodes 0 and 1."""
    return NetworkTopology(2, ((0, 1),), ((0, 1),))


@pytest.fixture
def default_device():
    return DeviceSet.uniform(1)


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


# -- acceptance report ---------------------------------------------------------------------

ACCEPTANCE = {}


def record(criterion: int, name: str, passed, detail: str) -> None:
    """Store one acceptance line; ``passed=None`` marks a criterion that could not run."""
    status = {True: "PASS", False: "FAIL", None: "NOT RUN"}[passed]
    ACCEPTANCE[criterion] = f"criterion {criterion:2d} {status:7s} {name}: {detail}"
    print(ACCEPTANCE[criterion])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
