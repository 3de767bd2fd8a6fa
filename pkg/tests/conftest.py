"""Collects acceptance verdicts and prints them after the run."""

ACCEPTANCE_LINES = {}


def record(criterion: int, ok: bool, detail: str, part: str = "") -> bool:
    label = f"{criterion}{part and ' ' + part}"
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {label}: {detail}"
    ACCEPTANCE_LINES[(criterion, part)] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
