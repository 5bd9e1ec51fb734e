import pytest

from pinlab.bounds import compute_constants
from pinlab.renewal import asymptotic_cal_c, renewal_function, srw_first_return_law


@pytest.fixture(scope="session")
def srw():
    return srw_first_return_law()


@pytest.fixture(scope="session")
def srw_small():
    return srw_first_return_law(2**10)


@pytest.fixture(scope="session")
def srw_u(srw_small):
    return renewal_function(srw_small)


@pytest.fixture(scope="session")
def cal_c(srw):
    return asymptotic_cal_c(srw)


@pytest.fixture(scope="session")
def constants():
    return compute_constants()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
