"""Fidelity measures between a real and a simulated log.

All time-based distances are in hours.
"""

import math
from dataclasses import dataclass

import numpy as np

from .eventlog import EventLog

HOUR = 3600.0


def wasserstein_1d(a, b) -> float:
    """Exact earth-mover distance between two empirical samples.

    Integrates |F_a - F_b| over the merged support, which equals the area
    between the two quantile functions and handles unequal lengths.
    """
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("wasserstein_1d needs two non-empty samples")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError("samples must be finite")
    if a.size == b.size:
        return float(np.mean(np.abs(a - b)))
    support = np.concatenate([a, b])
    support.sort(kind="mergesort")
    widths = np.diff(support)
    cdf_a = np.searchsorted(a, support[:-1], side="right") / a.size
    cdf_b = np.searchsorted(b, support[:-1], side="right") / b.size
    return float(np.sum(np.abs(cdf_a - cdf_b) * widths))


def _require(log, name):
    if not log.traces:
        raise ValueError(f"{name} log is empty")


def cycle_times_hours(log: EventLog) -> list:
    return [t.cycle_time / HOUR for t in log.traces]


def ctd_distance(real: EventLog, sim: EventLog) -> float:
    _require(real, "real")
    _require(sim, "simulated")
    return wasserstein_1d(cycle_times_hours(real), cycle_times_hours(sim))


def relative_hours(log: EventLog) -> list:
    """Start and end instants of every event as whole hours since its case arrival."""
    out = []
    for trace in log.traces:
        origin = trace.arrival_at
        for e in trace.events:
            for dt in (e.started_at, e.completed_at):
                out.append(math.floor((dt - origin).total_seconds() / HOUR))
    return out


def red_distance(real: EventLog, sim: EventLog) -> float:
    _require(real, "real")
    _require(sim, "simulated")
    return wasserstein_1d(relative_hours(real), relative_hours(sim))


def mmr(real: EventLog, sim: EventLog) -> float:
    """Fraction of real resources that never appear in the simulated log."""
    if not real.resources:
        raise ValueError("real log has no resources")
    shared = len(real.resources & sim.resources)
    return 1.0 - shared / len(real.resources)


@dataclass(frozen=True)
class MetricReport:
    red: float
    ctd: float
    mmr: float
    real_cases: int
    sim_cases: int

    def __post_init__(self):
        for name in ("red", "ctd", "mmr"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {v}")
        if self.mmr > 1.0:
            raise ValueError("mmr must lie in [0, 1]")

    def to_dict(self):
        return {"red": self.red, "ctd": self.ctd, "mmr": self.mmr,
                "real_cases": self.real_cases, "sim_cases": self.sim_cases}


def evaluate_logs(real: EventLog, sim: EventLog) -> MetricReport:
    return MetricReport(red_distance(real, sim), ctd_distance(real, sim), mmr(real, sim),
                        len(real.traces), len(sim.traces))
