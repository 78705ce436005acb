import pytest

_RESULTS = []


@pytest.fixture
def accept():
    """Record one acceptance line, print it, then assert it."""

    def record(label: str, ok: bool, detail: str):
        _RESULTS.append((label, bool(ok), detail))
        print(f"{label}: {'PASS' if ok else 'FAIL'} | {detail}")
        assert ok, f"{label}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in _RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
