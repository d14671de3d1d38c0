import pytest

_KEY = pytest.StashKey[list]()


@pytest.fixture
def criterion_log(request):
    """Record one PASS/FAIL line per acceptance criterion and fail on FAIL."""
    lines = request.config.stash.setdefault(_KEY, [])

    def record(label, ok, detail):
        line = f"{label}: {'PASS' if ok else 'FAIL'} | {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split(":")[0][1:])):
            terminalreporter.write_line(line)
