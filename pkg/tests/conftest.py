"""Shared pytest hooks: echo the acceptance summary after the test run."""

import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None) if mod else None
    if not lines:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for line in sorted(lines):
        terminalreporter.write_line(lines[line])
