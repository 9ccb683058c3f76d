"""Discovery of probabilistic calendars and calendar-adjusted processing times."""

from dataclasses import dataclass

import numpy as np

from .calendar import ProbabilisticCalendar, TimeGranularity, to_seconds
from .distributions import best_fit_distribution
from .eventlog import EventLog, group_by_resource, task_resources


def trapezoidal_weights(granule_span: int, beta: float) -> list:
    """Availability weight per spanned granule, 1.0 at both ends and decreasing inward.

    The decrement per step is ``beta / (span // 2)``, or 1.0 when ``beta`` is 0;
    weights are clamped at 0.
    """
    if granule_span < 1:
        raise ValueError("granule span must be at least 1")
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    if granule_span == 1:
        return [1.0]
    step = 1.0 / (granule_span // 2) * beta if beta > 0 else 1.0
    return [max(0.0, 1.0 - min(i, granule_span - 1 - i) * step) for i in range(granule_span)]


@dataclass
class FrequencyMatrices:
    """Per-resource weekday x granule tallies.

    ``weight`` accumulates operational evidence (the trapezoidal weights) and
    ``required`` counts how often the resource was needed in the p-granule.
    """

    resources: list
    granularity: TimeGranularity
    weight: np.ndarray
    required: np.ndarray

    @classmethod
    def empty(cls, resources, granularity):
        shape = (len(resources), 7, granularity.granule_count)
        return cls(list(resources), granularity, np.zeros(shape), np.zeros(shape))

    @property
    def busiest(self) -> np.ndarray:
        """Max availability weight over resources per (weekday, granule)."""
        if not self.resources:
            return np.zeros((7, self.granularity.granule_count))
        return self.weight.max(axis=0)

    def merge(self, other):
        if other.resources != self.resources or other.granularity != self.granularity:
            raise ValueError("frequency matrices are not aligned")
        return FrequencyMatrices(self.resources, self.granularity,
                                 self.weight + other.weight, self.required + other.required)

    def calendars(self) -> dict:
        out = {}
        top = self.busiest
        with np.errstate(divide="ignore", invalid="ignore"):
            for i, r in enumerate(self.resources):
                lam, req = self.weight[i], self.required[i]
                p_abs = np.where(req > 0, lam / np.where(req > 0, req, 1), 0.0)
                p_rel = np.where(top > 0, lam / np.where(top > 0, top, 1), 0.0)
                out[r] = ProbabilisticCalendar(self.granularity, np.clip(p_abs, 0, 1), np.clip(p_rel, 0, 1))
        return out


def _busy_granules(log: EventLog, gr: TimeGranularity) -> dict:
    busy = {}
    for r, events in group_by_resource(log).items():
        cells = busy.setdefault(r, set())
        for e in events:
            cells.update(gr.spanned(to_seconds(e.started_at), to_seconds(e.completed_at)))
    return busy


def count_frequencies(log: EventLog, granule_minutes: int = 60, beta: float = 0.5) -> FrequencyMatrices:
    """Tally availability evidence for every event of ``log``.

    The log must carry enablement times. Waiting intervals (enabled -> start)
    only mark idle candidates as required; execution intervals (start -> end)
    additionally credit the executing resource with the trapezoidal weight.
    """
    gr = TimeGranularity(granule_minutes)
    resources = sorted(log.resources)
    index = {r: i for i, r in enumerate(resources)}
    freq = FrequencyMatrices.empty(resources, gr)
    candidates = {a: [index[r] for r in rs] for a, rs in task_resources(log).items()}
    busy = _busy_granules(log, gr)
    busy_by_index = [busy.get(r, set()) for r in resources]

    for e in log.events():
        if e.enabled_at is None:
            raise ValueError("compute enabling times before discovering calendars")
        cands = candidates[e.activity]
        executor = index[e.resource]
        start, end = to_seconds(e.started_at), to_seconds(e.completed_at)
        enabled = to_seconds(e.enabled_at)
        spans = []
        if enabled < start:
            spans.append((gr.spanned(enabled, start), False))
        spans.append((gr.spanned(start, end), True))
        for granules, allocated in spans:
            weights = trapezoidal_weights(len(granules), beta)
            if len(granules) == 1:
                # start and end share the granule: both boundary updates land on it
                granules, weights = list(granules) * 2, weights * 2
            for g, p in zip(granules, weights):
                _, weekday, idx = gr.split(g)
                for c in cands:
                    if g not in busy_by_index[c]:
                        freq.required[c, weekday, idx] += 1
                if allocated:
                    freq.weight[executor, weekday, idx] += p
                    freq.required[executor, weekday, idx] += 1
    return freq


def discover_calendars(log: EventLog, granule_minutes: int = 60, beta: float = 0.5) -> dict:
    """Map each resource to its discovered probabilistic calendar.

    ``P_ABS = weight / required`` and ``P_REL = weight / busiest weight`` per
    (weekday, granule); cells with a zero denominator get probability 0.
    """
    TimeGranularity(granule_minutes)
    if not log.traces:
        return {}
    return count_frequencies(log, granule_minutes, beta).calendars()


def adjusted_duration(event, calendar: ProbabilisticCalendar) -> float:
    """Seconds of ``event`` weighted by max(P_ABS, P_REL) of every granule it overlaps."""
    gr = calendar.granularity
    probs = calendar.combined("max")
    start, end = to_seconds(event.started_at), to_seconds(event.completed_at)
    total = 0.0
    for g in gr.spanned(start, end):
        lo = max(start, gr.granule_start(g))
        hi = min(end, gr.granule_start(g + 1))
        if hi <= lo:
            continue
        _, weekday, idx = gr.split(g)
        total += (hi - lo) * probs[weekday, idx]
    return total


def fit_processing_times(log: EventLog, calendars: dict, kappa: int = 20) -> dict:
    """(resource, activity) -> fitted duration distribution of calendar-adjusted times.

    Pairs with fewer than ``kappa`` observations borrow the distribution of the
    fitted resource on the same activity whose raw mean duration is closest;
    without such a resource the activity's pooled adjusted times are fitted.
    """
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    adjusted, raw = {}, {}
    for e in log.events():
        if e.resource not in calendars:
            raise KeyError(f"no calendar for resource {e.resource!r}")
        key = (e.resource, e.activity)
        adjusted.setdefault(key, []).append(adjusted_duration(e, calendars[e.resource]))
        raw.setdefault(key, []).append(e.duration)

    fitted = {k: best_fit_distribution(v) for k, v in adjusted.items() if len(v) >= kappa}
    out = dict(fitted)
    pooled_cache = {}
    for key in sorted(adjusted):
        if key in fitted:
            continue
        resource, activity = key
        own_mean = float(np.mean(raw[key]))
        siblings = [k for k in fitted if k[1] == activity]
        if siblings:
            closest = min(siblings, key=lambda k: (abs(float(np.mean(raw[k])) - own_mean), k[0]))
            out[key] = fitted[closest]
            continue
        if activity not in pooled_cache:
            pooled = [x for k, v in adjusted.items() if k[1] == activity for x in v]
            pooled_cache[activity] = best_fit_distribution(pooled)
        out[key] = pooled_cache[activity]
    return out
