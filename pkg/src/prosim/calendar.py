"""Probabilistic weekly resource calendars and the stochastic availability primitives.

Times are handled internally as float seconds since the Unix epoch (UTC).
Granule ``g`` of the absolute timeline covers ``[offset + g*d, offset + (g+1)*d)``;
its day is ``g // n`` and its index within the day ``g % n``.
"""

import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

import numpy as np

WEEKDAYS = ("MONDAY", "TUESDAY", "WEDNESDAY", "THURSDAY", "FRIDAY", "SATURDAY", "SUNDAY")
DAY = 86400.0
_EPOCH_WEEKDAY = 3  # 1970-01-01 was a Thursday
MODES = ("abs", "rel", "max")
DEFAULT_HORIZON_WEEKS = 8


class CalendarError(ValueError):
    pass


class NotCoveredError(CalendarError):
    pass


class HorizonExhausted(RuntimeError):
    """No available granule was found within the search horizon."""


def to_seconds(dt: datetime) -> float:
    if dt.tzinfo is None:
        raise CalendarError("naive datetimes are not accepted")
    return dt.timestamp()


def from_seconds(s: float) -> datetime:
    return datetime(1970, 1, 1, tzinfo=timezone.utc) + timedelta(microseconds=round(s * 1e6))


@dataclass(frozen=True)
class TimeGranularity:
    granule_minutes: int = 60
    start_offset: int = 0  # minutes after midnight where granule 0 begins

    def __post_init__(self):
        if self.granule_minutes <= 0 or 1440 % self.granule_minutes:
            raise CalendarError(f"granule size must divide 1440 minutes, got {self.granule_minutes}")
        if not 0 <= self.start_offset < 1440:
            raise CalendarError("start offset must lie within one day")

    @property
    def granule_count(self) -> int:
        return 1440 // self.granule_minutes

    @property
    def seconds(self) -> float:
        return self.granule_minutes * 60.0

    def absolute_granule(self, t: float) -> int:
        return math.floor((t - self.start_offset * 60.0) / self.seconds)

    def granule_start(self, g: int) -> float:
        return g * self.seconds + self.start_offset * 60.0

    def split(self, g: int):
        """Absolute granule -> (epoch day, weekday slot, granule index)."""
        day, idx = divmod(g, self.granule_count)
        return day, (day + _EPOCH_WEEKDAY) % 7, idx

    def spanned(self, start: float, end: float):
        """Absolute granules touched by the half-open span [start, end).

        A zero-length span yields the granule containing ``start``.
        """
        first = self.absolute_granule(start)
        if end <= start:
            return range(first, first + 1)
        last = self.absolute_granule(end)
        if self.granule_start(last) >= end:
            last -= 1
        return range(first, last + 1)


@dataclass(frozen=True)
class RecurringSlots:
    """Pairwise-disjoint periodic slots; only the weekday scheme is unfolded on the timeline."""

    names: tuple = WEEKDAYS

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise CalendarError("recurring slots must be disjoint")

    def __len__(self):
        return len(self.names)

    def index_of(self, weekday: int) -> int:
        if self.names != WEEKDAYS:
            raise NotCoveredError("only the weekday slot scheme can be located on the timeline")
        return weekday


WEEKLY = RecurringSlots()


@dataclass(frozen=True, eq=False)
class ProbabilisticCalendar:
    granularity: TimeGranularity
    p_abs: np.ndarray
    p_rel: np.ndarray
    slots: RecurringSlots = WEEKLY

    def __post_init__(self):
        shape = (len(self.slots), self.granularity.granule_count)
        for name in ("p_abs", "p_rel"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise CalendarError(f"{name} has shape {arr.shape}, expected {shape}")
            if np.any(arr < 0.0) or np.any(arr > 1.0) or not np.all(np.isfinite(arr)):
                raise CalendarError(f"{name} probabilities must lie in [0, 1]")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __eq__(self, other):
        if not isinstance(other, ProbabilisticCalendar):
            return NotImplemented
        return (self.granularity == other.granularity and self.slots == other.slots
                and np.array_equal(self.p_abs, other.p_abs) and np.array_equal(self.p_rel, other.p_rel))

    @classmethod
    def constant(cls, p: float, granule_minutes: int = 60):
        gr = TimeGranularity(granule_minutes)
        grid = np.full((7, gr.granule_count), float(p))
        return cls(gr, grid, grid.copy())

    @classmethod
    def crisp(cls, intervals, granule_minutes: int = 60):
        """Build a {0,1} calendar from ``(weekday, 'HH:MM', 'HH:MM')`` intervals."""
        gr = TimeGranularity(granule_minutes)
        grid = np.zeros((7, gr.granule_count))
        for day, begin, end in intervals:
            d = WEEKDAYS.index(day.upper()) if isinstance(day, str) else int(day)
            lo, hi = _minutes(begin), _minutes(end)
            if hi == 0:
                hi = 1440
            for i in range(gr.granule_count):
                g0 = (gr.start_offset + i * gr.granule_minutes) % 1440
                if lo <= g0 and g0 + gr.granule_minutes <= hi:
                    grid[d, i] = 1.0
        return cls(gr, grid, grid.copy())

    def probability(self, slot: int, granule: int, mode: str = "max") -> float:
        if mode == "abs":
            return float(self.p_abs[slot, granule])
        if mode == "rel":
            return float(self.p_rel[slot, granule])
        if mode == "max":
            return float(max(self.p_abs[slot, granule], self.p_rel[slot, granule]))
        raise CalendarError(f"unknown availability mode {mode!r}")

    def combined(self, mode: str = "max") -> np.ndarray:
        if mode == "abs":
            return self.p_abs
        if mode == "rel":
            return self.p_rel
        return np.maximum(self.p_abs, self.p_rel)

    def is_crisp(self) -> bool:
        return all(np.all((m == 0.0) | (m == 1.0)) for m in (self.p_abs, self.p_rel))

    def to_dict(self):
        return {
            "granule_minutes": self.granularity.granule_minutes,
            "start_offset": self.granularity.start_offset,
            "p_abs": [[round(float(x), 12) for x in row] for row in self.p_abs],
            "p_rel": [[round(float(x), 12) for x in row] for row in self.p_rel],
        }

    @classmethod
    def from_dict(cls, data):
        gr = TimeGranularity(int(data["granule_minutes"]), int(data.get("start_offset", 0)))
        return cls(gr, np.array(data["p_abs"], dtype=float), np.array(data["p_rel"], dtype=float))


def _minutes(hhmm) -> int:
    if isinstance(hhmm, (int, float)):
        return int(hhmm)
    hh, mm = hhmm.split(":")[:2]
    return int(hh) * 60 + int(mm)


def locate(cal: ProbabilisticCalendar, at: datetime):
    """(slot index, granule index) containing ``at``."""
    _, weekday, idx = cal.granularity.split(cal.granularity.absolute_granule(to_seconds(at)))
    return cal.slots.index_of(weekday), idx


@dataclass(eq=False)
class AvailabilitySampler:
    """Per-run availability oracle for one resource.

    Each absolute granule is flipped at most once per run; later queries reuse the
    memoized outcome. Probabilities of exactly 0 or 1 never consume random draws.
    """

    calendar: ProbabilisticCalendar
    rng_seed: int = 0
    mode: str = "max"
    horizon_weeks: int = DEFAULT_HORIZON_WEEKS
    rng: np.random.Generator = None
    memo: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise CalendarError(f"unknown availability mode {self.mode!r}")
        if self.rng is None:
            self.rng = np.random.default_rng(self.rng_seed)
        self._probs = self.calendar.combined(self.mode)
        self._horizon = self.horizon_weeks * 7 * self.calendar.granularity.granule_count

    # granule-level primitives -------------------------------------------------

    def granule_available(self, g: int) -> bool:
        hit = self.memo.get(g)
        if hit is not None:
            return hit
        _, weekday, idx = self.calendar.granularity.split(g)
        p = self._probs[weekday, idx]
        if p >= 1.0:
            out = True
        elif p <= 0.0:
            out = False
        else:
            out = bool(self.rng.random() < p)
        self.memo[g] = out
        return out

    def next_available_s(self, t: float, horizon=None) -> float:
        gr = self.calendar.granularity
        g = gr.absolute_granule(t)
        limit = self._horizon if horizon is None else horizon
        for k in range(limit):
            if self.granule_available(g + k):
                return t if k == 0 else gr.granule_start(g + k)
        raise HorizonExhausted(f"no available granule within {limit} granules")

    def adjust_s(self, start: float, pt: float) -> float:
        if pt < 0:
            raise CalendarError("processing time must be non-negative")
        gr = self.calendar.granularity
        t, remaining = start, float(pt)
        while remaining > 0:
            t = self.next_available_s(t)
            g_end = gr.granule_start(gr.absolute_granule(t) + 1)
            step = g_end - t
            if step >= remaining:
                return t + remaining
            remaining -= step
            t = g_end
        return t

    # datetime API ---------------------------------------------------------------

    def is_available(self, slot: int, granule: int, mode=None, g=None) -> bool:
        """Bernoulli draw for the p-granule (slot, granule).

        ``g`` names the absolute granule for memoization; without it every call
        is a fresh draw.
        """
        if g is not None and (mode is None or mode == self.mode):
            return self.granule_available(g)
        p = self.calendar.probability(slot, granule, mode or self.mode)
        if p >= 1.0:
            return True
        if p <= 0.0:
            return False
        return bool(self.rng.random() < p)

    def available_at(self, at: datetime) -> bool:
        return self.granule_available(self.calendar.granularity.absolute_granule(to_seconds(at)))

    def next_available_time(self, at: datetime, horizon: timedelta = None) -> datetime:
        limit = None
        if horizon is not None:
            if horizon <= timedelta(0):
                raise CalendarError("horizon must be positive")
            limit = max(1, math.ceil(horizon.total_seconds() / self.calendar.granularity.seconds))
        return from_seconds(self.next_available_s(to_seconds(at), limit))

    def adjust_processing_time(self, start: datetime, pt: timedelta) -> datetime:
        return from_seconds(self.adjust_s(to_seconds(start), pt.total_seconds()))
