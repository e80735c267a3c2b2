"""Shared test plumbing.

The acceptance tests in test_acceptance.py are named test_criterion_NN_*;
after the run we print one PASS/FAIL line per criterion so the gate is
readable at a glance.
"""

from __future__ import annotations

import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results: dict[int, tuple[str, str]] = {}
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            m = _CRITERION.search(getattr(report, "nodeid", ""))
            if m:
                status = "PASS" if outcome == "passed" else "FAIL"
                results[int(m.group(1))] = (status, m.group(2))
    if not results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num in sorted(results):
        status, name = results[num]
        terminalreporter.write_line(f"criterion {num:2d} [{status}] {name.replace('_', ' ')}")
