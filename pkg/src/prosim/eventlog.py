"""Event logs: CSV parsing, enablement times and chronological splits."""

import csv
import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Iterable, Optional

DEFAULT_COLUMNS = {
    "case_id": "case_id",
    "activity": "activity",
    "resource": "resource",
    "start_time": "start_time",
    "end_time": "end_time",
    "enabled_time": "enabled_time",
    "arrival_time": "arrival_time",
}
REQUIRED = ("case_id", "activity", "resource", "start_time", "end_time")


class LogError(ValueError):
    pass


class LogSchemaError(LogError):
    def __init__(self, column):
        super().__init__(f"missing column: {column!r}")
        self.column = column


class LogParseError(LogError):
    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line


class LogValidationError(LogError):
    def __init__(self, rows, message="end time before start time"):
        listed = ", ".join(str(r) for r in rows)
        super().__init__(f"{message} on row(s) {listed}")
        self.rows = list(rows)


def parse_datetime(text: str) -> datetime:
    """ISO-8601 datetime with an explicit offset, normalized to UTC."""
    value = text.strip()
    if value.endswith("Z"):
        value = value[:-1] + "+00:00"
    dt = datetime.fromisoformat(value)
    if dt.tzinfo is None or dt.utcoffset() is None:
        raise ValueError(f"datetime without UTC offset: {text!r}")
    return dt.astimezone(timezone.utc)


def format_datetime(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).isoformat()


@dataclass(frozen=True)
class Event:
    case_id: str
    activity: str
    resource: str
    started_at: datetime
    completed_at: datetime
    enabled_at: Optional[datetime] = None

    @property
    def duration(self) -> float:
        """Raw processing time in seconds."""
        return (self.completed_at - self.started_at).total_seconds()


@dataclass(frozen=True)
class Trace:
    case_id: str
    events: tuple
    arrival_at: datetime

    def __post_init__(self):
        if not self.events:
            raise LogError(f"trace {self.case_id!r} has no events")
        if any(e.case_id != self.case_id for e in self.events):
            raise LogError(f"trace {self.case_id!r} mixes case identifiers")

    @classmethod
    def build(cls, case_id, events, arrival_at=None):
        ordered = tuple(sorted(events, key=lambda e: (e.started_at, e.completed_at, e.activity, e.resource)))
        if arrival_at is None:
            arrival_at = ordered[0].started_at
        return cls(case_id, ordered, arrival_at)

    @property
    def cycle_time(self) -> float:
        """Last completion minus case arrival, in seconds.

        Arrival defaults to the first start, so for logs without an explicit
        arrival column this is last completion minus first start.
        """
        first = min([self.arrival_at] + [e.started_at for e in self.events])
        last = max(e.completed_at for e in self.events)
        return (last - first).total_seconds()


@dataclass(frozen=True)
class EventLog:
    traces: tuple
    resources: frozenset = field(init=False)
    activities: frozenset = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "traces", tuple(self.traces))
        object.__setattr__(self, "resources", frozenset(e.resource for e in self.events()))
        object.__setattr__(self, "activities", frozenset(e.activity for e in self.events()))

    def events(self) -> Iterable[Event]:
        for trace in self.traces:
            yield from trace.events

    def __len__(self):
        return len(self.traces)

    @property
    def event_count(self) -> int:
        return sum(len(t.events) for t in self.traces)

    @classmethod
    def from_events(cls, events, arrivals=None):
        """Group events by case; ``arrivals`` optionally maps case id to arrival datetime."""
        grouped = {}
        for e in events:
            grouped.setdefault(e.case_id, []).append(e)
        arrivals = arrivals or {}
        traces = [Trace.build(cid, evs, arrivals.get(cid)) for cid, evs in grouped.items()]
        return cls(tuple(traces))


def parse_csv_log(path, column_map=None) -> EventLog:
    cols = dict(DEFAULT_COLUMNS)
    if column_map:
        cols.update(column_map)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for key in REQUIRED:
            if cols[key] not in header:
                raise LogSchemaError(cols[key])
        has_enabled = cols["enabled_time"] in header
        has_arrival = cols["arrival_time"] in header

        seen = set()
        events, arrivals, bad_rows = [], {}, []
        for row_no, row in enumerate(reader, start=1):
            line = reader.line_num
            try:
                start = parse_datetime(row[cols["start_time"]])
                end = parse_datetime(row[cols["end_time"]])
                enabled = None
                if has_enabled and row[cols["enabled_time"]].strip():
                    enabled = parse_datetime(row[cols["enabled_time"]])
                arrival = None
                if has_arrival and row[cols["arrival_time"]].strip():
                    arrival = parse_datetime(row[cols["arrival_time"]])
            except (ValueError, TypeError, AttributeError) as exc:
                raise LogParseError(line, str(exc)) from None
            if end < start:
                bad_rows.append(row_no)
                continue
            if enabled is not None and enabled > start:
                raise LogParseError(line, "enabled time after start time")
            case_id = row[cols["case_id"]]
            key = (case_id, row[cols["activity"]], row[cols["resource"]], start, end)
            if key in seen:
                continue
            seen.add(key)
            events.append(Event(case_id, key[1], key[2], start, end, enabled))
            if arrival is not None:
                prev = arrivals.get(case_id)
                arrivals[case_id] = arrival if prev is None else min(prev, arrival)
    if bad_rows:
        raise LogValidationError(bad_rows)
    return EventLog.from_events(events, arrivals)


def write_csv_log(log: EventLog, path) -> None:
    """Write ``log`` in the same CSV format :func:`parse_csv_log` reads."""
    with_enabled = all(e.enabled_at is not None for e in log.events())
    fields = ["case_id", "activity", "resource", "start_time", "end_time"]
    if with_enabled:
        fields.append("enabled_time")
    fields.append("arrival_time")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fields)
        for trace in log.traces:
            for e in trace.events:
                row = [e.case_id, e.activity, e.resource,
                       format_datetime(e.started_at), format_datetime(e.completed_at)]
                if with_enabled:
                    row.append(format_datetime(e.enabled_at))
                row.append(format_datetime(trace.arrival_at))
                writer.writerow(row)


def compute_enabling_times(log: EventLog, overwrite=False) -> EventLog:
    """Estimate enablement with the sequential-predecessor heuristic.

    An event is enabled at the latest completion among events of its trace that
    started strictly before it (or at the case arrival when there are none),
    clamped to its own start. Supplied enablement times are kept unless
    ``overwrite`` is set.
    """
    traces = []
    for trace in log.traces:
        new_events = []
        for e in trace.events:
            if e.enabled_at is not None and not overwrite:
                new_events.append(e)
                continue
            enabled = trace.arrival_at
            for other in trace.events:
                if other.started_at < e.started_at and other.completed_at > enabled:
                    enabled = other.completed_at
            enabled = min(enabled, e.started_at)
            new_events.append(replace(e, enabled_at=enabled))
        traces.append(Trace(trace.case_id, tuple(new_events), trace.arrival_at))
    return EventLog(tuple(traces))


def temporal_split(log: EventLog, fraction: float):
    """Split by case arrival: the first ``ceil(fraction * N)`` traces go to the first log."""
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    if len(log.traces) < 2:
        raise ValueError("temporal split needs at least two traces")
    ordered = sorted(log.traces, key=lambda t: (t.arrival_at, t.case_id))
    cut = math.ceil(fraction * len(ordered))
    cut = min(max(cut, 1), len(ordered) - 1)
    return EventLog(tuple(ordered[:cut])), EventLog(tuple(ordered[cut:]))


def group_by_resource(log: EventLog) -> dict:
    out = {}
    for e in log.events():
        out.setdefault(e.resource, []).append(e)
    return out


def task_resources(log: EventLog) -> dict:
    """Activity -> sorted list of resources observed executing it."""
    out = {}
    for e in log.events():
        out.setdefault(e.activity, set()).add(e.resource)
    return {a: sorted(rs) for a, rs in out.items()}
