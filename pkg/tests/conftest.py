"""Acceptance bookkeeping: one PASS/FAIL line per criterion at the end of the run."""
import os
import re
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))  # makes ``import oracles`` work

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(tag, label): acceptance criterion covered by a test")


@pytest.fixture
def measured(request):
    """Record ``name=value`` strings that are echoed next to the criterion line."""
    notes = []
    request.node.user_properties.append(("measured", notes))
    return lambda name, value: notes.append(f"{name}={value}")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    tag, label = mark.args
    if rep.when == "setup" and rep.skipped:
        status = "SKIP"
    elif rep.when == "call":
        if hasattr(rep, "wasxfail"):
            status = "FAIL (expected, see decisions ledger)" if rep.skipped else "PASS (unexpected)"
        else:
            status = "PASS" if rep.passed else "FAIL"
    elif rep.when == "setup" and rep.failed:
        status = "FAIL (setup error)"
    else:
        return
    notes = [n for key, vals in item.user_properties if key == "measured" for n in vals]
    _RESULTS[item.nodeid] = (tag, label, status, notes)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")

    def order(row):
        m = re.match(r"(\d+)(.*)", row[0])
        return int(m.group(1)), m.group(2)

    for tag, label, status, notes in sorted(_RESULTS.values(), key=order):
        extra = f"  [{', '.join(notes)}]" if notes else ""
        tr.write_line(f"criterion {tag:<4} {status:<40} {label}{extra}")
