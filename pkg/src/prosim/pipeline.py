"""End-to-end orchestration: discover a model from a log, evaluate it, tune it."""

import itertools
import math
from collections import Counter
from dataclasses import dataclass, replace

import numpy as np

from .calendar import DAY, WEEKDAYS, to_seconds
from .calendar_discovery import discover_calendars, fit_processing_times
from .distributions import DistributionSpec, best_fit_distribution
from .engine import simulate
from .eventlog import EventLog, compute_enabling_times, temporal_split
from .metrics import MetricReport, evaluate_logs, red_distance
from .model import ArrivalModel, Flow, Node, ProcessGraph, ResourceProfile, SimulationModel
from .multitask import SINGLE_TASK, discover_global, discover_local

MULTITASK_MODES = ("none", "global", "local")
GRID = {
    "granule_minutes": (15, 30, 60, 120),
    "beta": (0.0, 0.25, 0.5, 0.75, 1.0),
    "kappa": (5, 20, 50),
}
HOUR = 3600.0


# control flow -------------------------------------------------------------------------

def variant_graph(log: EventLog) -> ProcessGraph:
    """One sequential branch per distinct activity sequence, chosen with its observed frequency."""
    variants = Counter(tuple(e.activity for e in t.events) for t in log.traces)
    if not variants:
        raise ValueError("cannot build a graph from an empty log")
    ordered = sorted(variants.items(), key=lambda kv: (-kv[1], kv[0]))
    nodes = [Node("start", "start"), Node("end", "end")]
    flows = []
    split = "start"
    if len(ordered) > 1:
        nodes.append(Node("split", "xor"))
        flows.append(Flow("start", "split"))
        split = "split"
    total = sum(variants.values())
    used = 0.0
    for v, (seq, count) in enumerate(ordered):
        last = v == len(ordered) - 1
        prob = None
        if len(ordered) > 1:
            prob = 1.0 - used if last else count / total
            used += prob
        prev = split
        for i, activity in enumerate(seq):
            nid = f"v{v}_{i}"
            nodes.append(Node(nid, "task", activity))
            flows.append(Flow(prev, nid, prob if prev == split else None))
            prev = nid
        flows.append(Flow(prev, "end"))
    return ProcessGraph(tuple(nodes), tuple(flows))


# arrivals -----------------------------------------------------------------------------

def arrival_windows(arrivals) -> tuple:
    """Weekly (day, from, to) windows covering every hour in which a case arrived."""
    hours = {}
    for a in arrivals:
        hours.setdefault(a.weekday(), set()).add(a.hour)
    windows = []
    for day in sorted(hours):
        run = None
        for h in sorted(hours[day]) + [None]:
            if run and h == run[1]:
                run[1] = h + 1
                continue
            if run:
                windows.append((WEEKDAYS[day], f"{run[0]:02d}:00", f"{run[1]:02d}:00"))
            run = [h, h + 1] if h is not None else None
    return tuple(windows)


def _open_seconds(a: float, b: float, open_hours: set) -> float:
    """Seconds between ``a`` and ``b`` that fall inside the weekly open hours."""
    total, t = 0.0, a
    while t < b:
        nxt = min(b, (math.floor(t / HOUR) + 1) * HOUR)
        day = math.floor(t / DAY)
        key = ((day + 3) % 7, int((t - day * DAY) // HOUR))
        if key in open_hours:
            total += nxt - t
        t = nxt
    return total


def fit_arrivals(log: EventLog) -> ArrivalModel:
    arrivals = sorted(t.arrival_at for t in log.traces)
    windows = arrival_windows(arrivals)
    if len(arrivals) < 2:
        return ArrivalModel(DistributionSpec.fixed(HOUR), windows)
    open_hours = {(WEEKDAYS.index(d), h) for d, lo, hi in windows for h in range(int(lo[:2]), int(hi[:2]))}
    secs = [to_seconds(a) for a in arrivals]
    gaps = [_open_seconds(x, y, open_hours) for x, y in zip(secs, secs[1:])]
    return ArrivalModel(best_fit_distribution(gaps), windows)


# discovery ------------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscoveryConfig:
    granule_minutes: int = 60
    beta: float = 0.5
    kappa: int = 20
    multitask: str = "none"
    local_granule_minutes: int = 60

    def __post_init__(self):
        if self.multitask not in MULTITASK_MODES:
            raise ValueError(f"multitask must be one of {MULTITASK_MODES}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")


def discover_model(log: EventLog, cfg: DiscoveryConfig = DiscoveryConfig(), graph: ProcessGraph = None,
                   calendars: dict = None) -> SimulationModel:
    """Calendars, processing times, multitasking, arrivals and (unless given) control flow."""
    if not log.traces:
        raise ValueError("cannot discover a model from an empty log")
    log = compute_enabling_times(log)
    if calendars is None:
        calendars = discover_calendars(log, cfg.granule_minutes, cfg.beta)
    perf = fit_processing_times(log, calendars, cfg.kappa)
    if cfg.multitask == "global":
        multi = discover_global(log)
    elif cfg.multitask == "local":
        multi = discover_local(log, cfg.local_granule_minutes)
    else:
        multi = None
    profiles = {}
    for r in sorted(log.resources):
        own = {a: spec for (res, a), spec in perf.items() if res == r}
        profiles[r] = ResourceProfile(r, own, calendars[r], SINGLE_TASK)
    graph = graph or variant_graph(log)
    arrivals = sorted(t.arrival_at for t in log.traces)
    model = SimulationModel(graph, profiles, fit_arrivals(log), len(log.traces), arrivals[0],
                            metadata={"granule_minutes": cfg.granule_minutes, "beta": cfg.beta,
                                      "kappa": cfg.kappa, "multitask": cfg.multitask})
    return model.with_multitask(multi).validate()


# evaluation ----------------------------------------------------------------------------

def trimmed_mean(values) -> float:
    """Mean after dropping one lowest and one highest value (when at least three)."""
    values = sorted(values)
    if not values:
        raise ValueError("no values to average")
    if len(values) >= 3:
        values = values[1:-1]
    return float(np.mean(values))


def simulate_against(model: SimulationModel, real: EventLog, seed: int) -> EventLog:
    """Simulate ``model`` with the case arrivals of ``real``."""
    arrivals = sorted(t.arrival_at for t in real.traces)
    model = replace(model, case_count=len(arrivals), start_at=arrivals[0])
    return simulate(model, seed=seed, arrivals=arrivals)


def evaluate_repetitions(real: EventLog, model: SimulationModel, repetitions: int = 5, seed: int = 0,
                         use_real_arrivals: bool = True) -> MetricReport:
    """Run ``repetitions`` seeded simulations and trim-average each metric."""
    if repetitions < 1:
        raise ValueError("repetitions must be positive")
    reports = []
    for k in range(repetitions):
        if use_real_arrivals:
            sim = simulate_against(model, real, seed + k)
        else:
            sim = simulate(model, seed=seed + k)
        reports.append(evaluate_logs(real, sim))
    return MetricReport(trimmed_mean([r.red for r in reports]), trimmed_mean([r.ctd for r in reports]),
                        trimmed_mean([r.mmr for r in reports]), len(real.traces),
                        int(round(np.mean([r.sim_cases for r in reports]))))


@dataclass(frozen=True)
class SweepRow:
    granule_minutes: int
    beta: float
    kappa: int
    red: float


def sweep(log: EventLog, train_fraction: float = 0.5, grid: dict = None, seed: int = 0,
          multitask: str = "none", graph: ProcessGraph = None, repetitions: int = 1):
    """Grid search minimizing RED on the held-out part of a chronological split.

    Returns (rows, best row).
    """
    grid = dict(GRID, **(grid or {}))
    train, test = temporal_split(log, train_fraction)
    train = compute_enabling_times(train)
    graph = graph or variant_graph(train)
    rows, cal_cache = [], {}
    for gm, beta, kappa in itertools.product(grid["granule_minutes"], grid["beta"], grid["kappa"]):
        if (gm, beta) not in cal_cache:
            cal_cache[(gm, beta)] = discover_calendars(train, gm, beta)
        cfg = DiscoveryConfig(gm, beta, kappa, multitask)
        model = discover_model(train, cfg, graph=graph, calendars=cal_cache[(gm, beta)])
        reds = [red_distance(test, simulate_against(model, test, seed + k)) for k in range(repetitions)]
        rows.append(SweepRow(gm, beta, kappa, trimmed_mean(reds)))
    best = min(rows, key=lambda r: (r.red, r.granule_minutes, r.beta, r.kappa))
    return rows, best
