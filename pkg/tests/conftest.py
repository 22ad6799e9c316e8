import pytest

_LOG = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    return request.config.stash.setdefault(_LOG, [])


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LOG, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
