import hypothesis
import pytest

hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one pass/fail line for the terminal summary."""

    def add(name: str, ok: bool, detail: str) -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
