import numpy as np
import pytest

from chemorep.fem import assemble_operators
from chemorep.mesh import build_structured


@pytest.fixture(scope="session")
def mesh22():
    return build_structured(2, 2, 2.0, 2.0)


@pytest.fixture(scope="session")
def ops22(mesh22):
    return assemble_operators(mesh22)


@pytest.fixture(scope="session")
def mesh44():
    return build_structured(4, 4, 2.0, 2.0)


@pytest.fixture(scope="session")
def ops44(mesh44):
    return assemble_operators(mesh44)


@pytest.fixture()
def rng():
    return np.random.default_rng(1729)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
