import pytest

_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def report():
    """report(n, ok, detail) records one acceptance line and returns ok."""

    def _report(n: int, ok: bool, detail: str) -> bool:
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _LINES[n] = line
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance")
    for n in sorted(_LINES):
        terminalreporter.write_line(_LINES[n])
