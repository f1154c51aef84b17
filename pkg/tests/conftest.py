from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# one line per acceptance criterion, repeated in the terminal summary so it
# survives output capture
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: s.split("criterion", 1)[1]):
            terminalreporter.write_line(line)


def assert_reports(reports) -> None:
    """Fail with the first witness of every failing report."""
    reports = list(reports)
    assert reports, "no identity was checked"
    bad = [r for r in reports if not r.ok]
    if bad:
        lines = [f"{r.identity}: {r.failure_count} failures, first {r.failures[0].to_json()}" for r in bad]
        pytest.fail("\n".join(lines))
    assert all(r.checked > 0 for r in reports), [r.identity for r in reports if r.checked == 0]
