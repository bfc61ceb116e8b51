import pytest

# (criterion number, passed, detail) recorded by the acceptance tests
ACCEPTANCE_LINES: list[tuple[int, bool, str]] = []


@pytest.fixture
def criterion():
    def report(number: int, passed: bool, detail: str) -> None:
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append((number, passed, line))
        print(line)
        assert passed, line
    return report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
