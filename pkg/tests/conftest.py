import pytest

ACCEPTANCE: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for the acceptance summary, then assert."""

    def record(number: int, title: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}  {title}: {detail}"
        ACCEPTANCE.append((number, line))
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)
