import sys

import pytest

from smstab.single import SingleMachineParams
from smstab.two import TwoMachineParams


@pytest.fixture
def case1():
    return SingleMachineParams(J=1, D=1, T_m=9, R=1, L=1, b=4)


@pytest.fixture
def case2():
    return TwoMachineParams.from_aggregate(J=1, D=9, T_m1=2910, T_m2=2800, R=1010, R_L=1000,
                                           L=0.041, L3=0.04, b=5)


@pytest.fixture
def sym2():
    """Small symmetric two-machine system (equal torques)."""
    return TwoMachineParams(J=1, D=1, T_m1=9, T_m2=9, R_s=0.5, R_L=0.5, L=1, L3=0.5, b=4)


def pytest_terminal_summary(terminalreporter):
    for name, mod in list(sys.modules.items()):
        if name.endswith("test_acceptance") and getattr(mod, "RESULTS", None):
            terminalreporter.section("acceptance criteria")
            for line in mod.RESULTS:
                terminalreporter.write_line(line)
