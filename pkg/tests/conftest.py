import pytest

from cepnets.scale import declare_scale, geometric_schedule

# Tail of the 0.9 * 0.85^j schedule: lambda in [0.0016, 0.0069].  Deep enough
# for degree-10 ideal certificates of exp(-c/lambda) nets, shallow enough
# that exp(1/lambda) is still a finite double.
CATALOG_SCHEDULE = dict(start=0.9, ratio=0.85, count=40)


@pytest.fixture(scope="session")
def colombeau():
    """Base (lambda) on lambda_j = 2^-j, j = 1..40, tail 10."""
    return declare_scale(["lambda"], geometric_schedule(), 10)


@pytest.fixture(scope="session")
def loglam():
    return declare_scale(["lambda", "1/log(1/lambda)"], geometric_schedule(), 10)


@pytest.fixture(scope="session")
def catalog():
    return declare_scale(["lambda"], geometric_schedule(**CATALOG_SCHEDULE), 10)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
