import pytest

from npidob.config import bundled_config

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def published():
    return bundled_config("published_gains")


@pytest.fixture(scope="session")
def default_cfg():
    return bundled_config("default")


@pytest.fixture(scope="session")
def motor(published):
    return published[0]


@pytest.fixture(scope="session")
def gains(published):
    return published[1]


@pytest.fixture
def verdict():
    """Record a one-line PASS/FAIL verdict for an acceptance criterion."""

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} | {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
