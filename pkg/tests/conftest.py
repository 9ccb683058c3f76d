from datetime import datetime, timedelta, timezone

import pytest

from prosim.eventlog import Event, EventLog

T0 = datetime(2024, 1, 1, tzinfo=timezone.utc)  # a Monday


def at(day=0, hour=0, minute=0):
    return T0 + timedelta(days=day, hours=hour, minutes=minute)


def ev(case, activity, resource, start, end, enabled=None):
    return Event(case, activity, resource, start, end, enabled)


def log_of(*events, arrivals=None):
    return EventLog.from_events(events, arrivals)


@pytest.fixture
def small_log():
    return log_of(
        ev("c1", "A", "R1", at(0, 9), at(0, 9, 30)),
        ev("c1", "B", "R2", at(0, 10), at(0, 11)),
        ev("c2", "A", "R1", at(0, 10), at(0, 10, 45)),
        ev("c2", "B", "R1", at(0, 11), at(0, 12, 15)),
        ev("c3", "A", "R2", at(1, 14), at(1, 14, 20)),
    )


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for number in range(1, 11):
        if number not in mod.RESULTS:
            terminalreporter.write_line(f"criterion {number:2d}: NOT RUN")
            continue
        title, ok, detail = mod.RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title}  ({detail})")
