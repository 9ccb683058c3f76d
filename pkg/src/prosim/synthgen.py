"""Ground-truth log generation and vacation-style perturbations.

Generation uses crisp, sequential resource semantics: a granule is open when
its combined probability is at least 0.5, an assigned resource starts at its
next open instant after both enablement and its previous assignment, and
completion is start plus the drawn processing time (no pauses).
"""

from dataclasses import dataclass, replace
from datetime import timedelta

import numpy as np

from .calendar import AvailabilitySampler, ProbabilisticCalendar
from .engine import run_token_game, sample_arrivals
from .eventlog import EventLog, Trace
from .model import SimulationModel

BALANCES = ("balanced", "unbalanced")
SCENARIOS = ("TRAIN", "TEST", "TNT")
UNBALANCED_GROUPS = 6
CRISP_THRESHOLD = 0.5


@dataclass(frozen=True)
class GenerationConfig:
    model: SimulationModel
    balance: str = "balanced"
    seed: int = 0
    case_count: int = None
    overlap: bool = False  # start at enablement even when the resource is busy

    def __post_init__(self):
        if self.balance not in BALANCES:
            raise ValueError(f"balance must be one of {BALANCES}, got {self.balance!r}")
        if self.case_count is not None and self.case_count < 1:
            raise ValueError("case_count must be positive")


def crisp_version(cal: ProbabilisticCalendar) -> ProbabilisticCalendar:
    on = (cal.combined("max") >= CRISP_THRESHOLD).astype(float)
    return ProbabilisticCalendar(cal.granularity, on, on.copy(), cal.slots)


def group_schedule(n_groups: int) -> list:
    """One period of group indices where group k (0-based) appears k + 1 times.

    The groups are interleaved largest-first so short windows stay mixed.
    """
    remaining = list(range(1, n_groups + 1))
    out = []
    while any(remaining):
        for k in reversed(range(n_groups)):
            if remaining[k]:
                out.append(k)
                remaining[k] -= 1
    return out


class RoundRobinAllocator:
    """Deterministic allocation over each activity's capable resources.

    Balanced mode cycles through the capable resources. Unbalanced mode splits
    them into up to six groups, group k taking k of every 1 + 2 + ... + g
    instances, and cycles within each group.
    """

    def __init__(self, model: SimulationModel, rng, balance="balanced", overlap=False):
        self.model = model
        self.rng = rng
        self.balance = balance
        self.overlap = overlap
        self.samplers = {r: AvailabilitySampler(crisp_version(p.avail), rng=rng)
                         for r, p in model.profiles.items()}
        self.free_at = {r: float("-inf") for r in model.resources}
        self.counters = {}
        self.assigned = {}

    def groups(self, capable):
        g = min(UNBALANCED_GROUPS, len(capable))
        return [capable[i::g] for i in range(g)]

    def choose(self, activity):
        capable = tuple(self.model.capable(activity))
        state = self.counters.setdefault(capable, {"n": 0, "within": {}})
        n = state["n"]
        state["n"] += 1
        if self.balance == "balanced":
            return capable[n % len(capable)]
        groups = self.groups(list(capable))
        schedule = group_schedule(len(groups))
        k = schedule[n % len(schedule)]
        i = state["within"].get(k, 0)
        state["within"][k] = i + 1
        return groups[k][i % len(groups[k])]

    def __call__(self, activity, enabled):
        r = self.choose(activity)
        self.assigned[r] = self.assigned.get(r, 0) + 1
        sampler = self.samplers[r]
        ready = enabled if self.overlap else max(enabled, self.free_at[r])
        start = sampler.next_available_s(ready)
        duration = self.model.profiles[r].perf[activity].sample(self.rng)
        completion = start + duration
        self.free_at[r] = max(self.free_at[r], completion)
        return r, start, completion


def generate_synthetic_log(cfg: GenerationConfig) -> EventLog:
    model = cfg.model
    if cfg.case_count is not None:
        model = replace(model, case_count=cfg.case_count)
    model.validate()
    rng = np.random.default_rng(cfg.seed)
    arrivals = sample_arrivals(model, rng)
    allocator = RoundRobinAllocator(model, rng, cfg.balance, cfg.overlap)
    return run_token_game(model, rng, arrivals, allocator)


# perturbation ----------------------------------------------------------------------

@dataclass(frozen=True)
class PerturbationConfig:
    scenario: str = "TRAIN"
    break_weeks: int = 1
    train_anchor: float = 0.10
    test_anchor: float = 0.60
    resource: str = None
    substitute: str = None  # set to relabel instead of shifting

    def __post_init__(self):
        scenario = self.scenario.upper().replace("&", "N")
        if scenario not in SCENARIOS:
            raise ValueError(f"scenario must be one of TRAIN, TEST, T&T; got {self.scenario!r}")
        object.__setattr__(self, "scenario", scenario)
        if int(self.break_weeks) != self.break_weeks or self.break_weeks < 1:
            raise ValueError("break_weeks must be a positive integer")
        for f in (self.train_anchor, self.test_anchor):
            if not 0.0 < f < 1.0:
                raise ValueError("anchor fractions must lie in (0, 1)")
        if self.substitute is not None and self.resource is None:
            raise ValueError("relabeling needs the vacationing resource")

    @property
    def anchors(self):
        return {"TRAIN": (self.train_anchor,), "TEST": (self.test_anchor,),
                "TNT": (self.train_anchor, self.test_anchor)}[self.scenario]

    @property
    def duration(self) -> timedelta:
        return timedelta(weeks=self.break_weeks)


def _datetimes(log):
    out = []
    for e in log.events():
        out.extend((e.started_at, e.completed_at))
    return sorted(out)


def anchor_datetime(log: EventLog, fraction: float):
    """Datetime at ``fraction`` of the log's sorted start/completion sequence."""
    stamps = _datetimes(log)
    if not stamps:
        raise ValueError("cannot perturb an empty log")
    at = stamps[min(int(fraction * len(stamps)), len(stamps) - 1)]
    if not stamps[0] < at <= stamps[-1]:
        raise ValueError(f"anchor fraction {fraction} does not fall strictly inside the log's span")
    return at


def shift_after(log: EventLog, anchors, delta: timedelta) -> EventLog:
    """Add ``delta`` once per anchor at or before each datetime (anchors taken on the input log)."""
    anchors = sorted(anchors)

    def move(dt):
        if dt is None:
            return None
        return dt + delta * sum(1 for a in anchors if dt >= a)

    traces = []
    for t in log.traces:
        events = tuple(replace(e, started_at=move(e.started_at), completed_at=move(e.completed_at),
                               enabled_at=move(e.enabled_at)) for e in t.events)
        traces.append(Trace(t.case_id, events, move(t.arrival_at)))
    return EventLog(tuple(traces))


def relabel_window(log: EventLog, resource, substitute, windows) -> EventLog:
    """Hand events of ``resource`` starting inside any (from, to) window to ``substitute``."""
    def inside(dt):
        return any(lo <= dt < hi for lo, hi in windows)

    traces = []
    for t in log.traces:
        events = tuple(replace(e, resource=substitute) if e.resource == resource and inside(e.started_at) else e
                       for e in t.events)
        traces.append(Trace(t.case_id, events, t.arrival_at))
    return EventLog(tuple(traces))


def inject_unavailability(log: EventLog, cfg: PerturbationConfig) -> EventLog:
    anchors = [anchor_datetime(log, f) for f in cfg.anchors]
    if cfg.substitute is None:
        return shift_after(log, anchors, cfg.duration)
    if cfg.resource not in log.resources:
        raise ValueError(f"resource {cfg.resource!r} does not occur in the log")
    return relabel_window(log, cfg.resource, cfg.substitute, [(a, a + cfg.duration) for a in anchors])
