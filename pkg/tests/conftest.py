"""Shared test plumbing: collects acceptance-criterion verdict lines.

test_acceptance.py registers one line per criterion; they are echoed in a
dedicated section of the terminal summary so every run shows the scorecard
even when output capturing is on.
"""

ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, passed: bool) -> None:
    ACCEPTANCE_LINES.append(f"CRITERION {number:2d} {title}: {'PASS' if passed else 'FAIL'}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
