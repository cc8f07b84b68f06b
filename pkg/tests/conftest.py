"""Shared fixtures; collects one summary line per acceptance criterion."""

ACCEPTANCE = {}


def record(number: int, ok: bool, seconds: float, detail: str = ""):
    ACCEPTANCE[number] = (ok, seconds, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, secs, detail = ACCEPTANCE[n]
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  ({secs:.1f} s)"
        if detail:
            line += f"  {detail}"
        terminalreporter.write_line(line)
