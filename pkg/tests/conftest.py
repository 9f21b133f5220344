import pytest

_ACCEPTANCE: list[str] = []


@pytest.fixture
def acceptance_line():
    """Record one pass/fail summary line for the acceptance report."""

    def record(criterion: str, passed: bool, detail: str) -> bool:
        line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: s.split(":")[0]):
            terminalreporter.write_line(line)
