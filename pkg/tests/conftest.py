import pytest

from clampedplate.fdsolver import make_domain, principal_eigenpair


@pytest.fixture(scope="session")
def disk64():
    return make_domain("disk", [1.0], 64)


@pytest.fixture(scope="session")
def disk64_pair(disk64):
    return principal_eigenpair(disk64)


@pytest.fixture(scope="session")
def disk128_pair():
    return principal_eigenpair(make_domain("disk", [1.0], 128))


@pytest.fixture(scope="session")
def square48():
    return make_domain("square", [2.0], 48)


@pytest.fixture(scope="session")
def square48_pair(square48):
    return principal_eigenpair(square48)


@pytest.fixture(scope="session")
def annulus64():
    return make_domain("annulus", [0.4, 1.0], 64)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line for an acceptance criterion."""

    def record(number: int, title: str, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'} [{number}] {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
