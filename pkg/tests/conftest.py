import pytest

_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_KEY] = []


@pytest.fixture
def report(request):
    """Record one acceptance line: report(tag, ok, text)."""
    lines = request.config.stash[_KEY]

    def _report(tag: str, ok: bool, text: str):
        line = f"{'PASS' if ok else 'FAIL'} [{tag}] {text}"
        lines.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
