"""Probabilistic multitasking capacity: MDPDs, global/local discovery, the multitask gate."""

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .calendar import WEEKLY, RecurringSlots, TimeGranularity, to_seconds
from .eventlog import EventLog, group_by_resource


@dataclass(frozen=True)
class MDPD:
    """Inverse-cumulative multitasking distribution; ``probs[i-1]`` is P(level >= i)."""

    probs: tuple = (1.0,)

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        if not probs:
            raise ValueError("an MDPD needs at least one level")
        if probs[0] != 1.0:
            raise ValueError("level-1 probability must be 1.0")
        if any(not 0.0 < p <= 1.0 for p in probs):
            raise ValueError("MDPD probabilities must lie in (0, 1]")
        if any(b > a for a, b in zip(probs, probs[1:])):
            raise ValueError("MDPD probabilities must be non-increasing")
        object.__setattr__(self, "probs", probs)

    @property
    def max_level(self) -> int:
        return len(self.probs)

    def level(self, i: int) -> float:
        """Probability of handling ``i`` concurrent instances (0 outside 1..n)."""
        return self.probs[i - 1] if 1 <= i <= self.max_level else 0.0


SINGLE_TASK = MDPD()


def mdpd_fractions(freqs: dict) -> list:
    """Exact rational MDPD levels 1..n for a level -> count mapping."""
    positive = [lvl for lvl, c in freqs.items() if c > 0]
    if not positive:
        raise ValueError("MDPD needs at least one positive frequency")
    if any(lvl < 1 for lvl in freqs):
        raise ValueError("multitasking levels start at 1")
    n = max(positive)
    total = sum(int(freqs.get(j, 0)) for j in range(1, n + 1))
    out, tail = [], 0
    for i in range(n, 0, -1):
        tail += int(freqs.get(i, 0))
        out.append(Fraction(tail, total))
    return out[::-1]


def compute_mdpd(freqs: dict) -> MDPD:
    return MDPD(tuple(float(f) for f in mdpd_fractions(freqs)))


def sweep_levels(intervals) -> dict:
    """Concurrency level seen by each interval start.

    Intervals are half-open ``(start, end)``; ends are processed before starts at
    equal instants so back-to-back intervals do not overlap. Zero-length
    intervals count as instants.
    """
    points = []
    for s, e in intervals:
        points.append((s, 1))
        points.append((e, 2 if e <= s else 0))
    points.sort(key=lambda p: (p[0], p[1]))
    active, freqs = 0, {}
    for _, kind in points:
        if kind == 1:
            active += 1
            freqs[active] = freqs.get(active, 0) + 1
        else:
            active -= 1
    return freqs


@dataclass(frozen=True)
class GlobalMultitask:
    mdpds: dict = field(default_factory=dict)

    def for_resource(self, resource) -> MDPD:
        return self.mdpds.get(resource, SINGLE_TASK)


@dataclass(frozen=True)
class LocalMultitask:
    """Per-resource weekday x granule MDPD grid; missing cells are single-task."""

    granularity: TimeGranularity
    cells: dict = field(default_factory=dict)  # resource -> {(slot, granule): MDPD}
    slots: RecurringSlots = WEEKLY

    def for_cell(self, resource, slot, granule) -> MDPD:
        return self.cells.get(resource, {}).get((slot, granule), SINGLE_TASK)

    def resource_view(self, resource):
        return LocalMultitask(self.granularity, {resource: self.cells.get(resource, {})}, self.slots)


def _intervals(events):
    return [(to_seconds(e.started_at), to_seconds(e.completed_at)) for e in events]


def discover_global(log: EventLog) -> GlobalMultitask:
    out = {}
    for r, events in group_by_resource(log).items():
        out[r] = compute_mdpd(sweep_levels(_intervals(events)))
    return GlobalMultitask(out)


def to_dated_granules(gr: TimeGranularity, start: float, end: float):
    """Cut ``[start, end)`` into (absolute granule, clipped interval) pieces."""
    pieces = []
    for g in gr.spanned(start, end):
        lo = max(start, gr.granule_start(g))
        hi = min(end, gr.granule_start(g + 1))
        pieces.append((g, (lo, hi)))
    return pieces


def discover_local(log: EventLog, granularity=None, slots: RecurringSlots = WEEKLY) -> LocalMultitask:
    gr = granularity or TimeGranularity(60)
    if isinstance(gr, int):
        gr = TimeGranularity(gr)
    cells = {}
    for r, events in group_by_resource(log).items():
        dated = {}
        for s, e in _intervals(events):
            for g, piece in to_dated_granules(gr, s, e):
                dated.setdefault(g, []).append(piece)
        per_cell = {}
        for g, pieces in dated.items():
            _, weekday, idx = gr.split(g)
            key = (slots.index_of(weekday), idx)
            for lvl, c in sweep_levels(sorted(pieces)).items():
                per_cell.setdefault(key, {})
                per_cell[key][lvl] = per_cell[key].get(lvl, 0) + c
        cells[r] = {k: compute_mdpd(f) for k, f in per_cell.items()}
    return LocalMultitask(gr, cells, slots)


def can_multitask(mdpd: MDPD, current_load: int, rng: np.random.Generator) -> bool:
    """Whether a resource already running ``current_load`` instances accepts one more."""
    if current_load < 0:
        raise ValueError("load must be non-negative")
    if current_load >= mdpd.max_level:
        return False
    p = mdpd.level(current_load + 1)
    if p >= 1.0:
        return True
    return bool(rng.random() < p)
