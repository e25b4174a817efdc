import pytest

from bivcpe.distributions import catalogue


@pytest.fixture(scope="session")
def cat():
    return catalogue()


@pytest.fixture(scope="session")
def triangle(cat):
    return cat["triangle"]


@pytest.fixture(scope="session")
def linear_density(cat):
    return cat["linear_density"]


@pytest.fixture(scope="session")
def unif(cat):
    return cat["independent_uniform"]


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
