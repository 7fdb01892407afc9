import pytest

_CRITERIA: list[str] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; call with (number, passed, detail)."""
    def record(number: int, passed: bool, detail: str) -> bool:
        _CRITERIA.append(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
