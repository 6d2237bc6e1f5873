"""Acceptance bookkeeping: one PASS/FAIL line per criterion at the end of the run."""

import pytest

CRITERIA = {
    1: "kernel semantics",
    2: "arbitration",
    3: "storage primitives",
    4: "reference designs",
    5: "router credit conservation and latency",
    6: "topology structure and deliverability",
    7: "end-to-end golden check, runtime, determinism",
    8: "drain after injection stops",
}

_outcomes: dict[int, list[bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion this test belongs to")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n = marker.args[0]
    if call.when == "call" or call.excinfo is not None:
        _outcomes.setdefault(n, []).append(call.excinfo is None)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in CRITERIA.items():
        results = _outcomes.get(n)
        if results is None:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {status}  {title} ({len(results or [])} checks)")
