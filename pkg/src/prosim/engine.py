"""Discrete-event simulation of a process model under probabilistic resources.

A run owns one seeded ``numpy`` generator. Draw order: all case arrivals first,
then, in event-processing order, gateway branch choices, resource choice,
availability flips, processing time and the multitask gate.
"""

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .calendar import AvailabilitySampler, DAY, HorizonExhausted, _minutes, from_seconds, to_seconds
from .eventlog import Event, EventLog, Trace
from .model import ModelError, SimulationModel
from .multitask import can_multitask


class SimulationError(RuntimeError):
    pass


# arrivals ----------------------------------------------------------------------

def sample_arrivals(model: SimulationModel, rng: np.random.Generator) -> list:
    """Case creation datetimes, non-decreasing, exactly ``model.case_count`` of them."""
    if model.case_count < 1:
        raise ModelError("case_count must be positive")
    if not model.arrival.windows:
        raise ModelError("arrival calendar is empty")
    gate = AvailabilitySampler(model.arrival.calendar(), horizon_weeks=1)
    try:
        if model.arrival.batch_times:
            return _batched_arrivals(model, gate)
        t = gate.next_available_s(to_seconds(model.start_at))
        out = []
        for _ in range(model.case_count):
            t = gate.next_available_s(t + model.arrival.interarrival.sample(rng))
            out.append(t)
    except HorizonExhausted:
        raise ModelError("arrival calendar has no open interval") from None
    return [from_seconds(s) for s in out]


def _batched_arrivals(model, gate):
    start = to_seconds(model.start_at)
    day0 = math.floor(start / DAY)
    times = sorted(_minutes(t) * 60.0 for t in model.arrival.batch_times)
    out, day = [], day0
    while len(out) < model.case_count:
        for offset in times:
            t = day * DAY + offset
            if t < start or not gate.granule_available(gate.calendar.granularity.absolute_granule(t)):
                continue
            take = min(model.arrival.batch_size, model.case_count - len(out))
            out.extend([t] * take)
            if len(out) >= model.case_count:
                break
        day += 1
        if day - day0 > 7 and not out:
            raise ModelError("no batch time falls inside the arrival calendar")
    return [from_seconds(s) for s in out]


# resource allocation ---------------------------------------------------------------

@dataclass
class ResourceQueue:
    """Resources keyed by the datetime (epoch seconds) from which they accept work."""

    heap: list = field(default_factory=list)
    inflight: dict = field(default_factory=dict)  # resource -> completion times

    @classmethod
    def of(cls, resources, at: float):
        q = cls([(at, r) for r in sorted(resources)], {r: [] for r in resources})
        heapq.heapify(q.heap)
        return q

    def push(self, resource, at: float):
        heapq.heappush(self.heap, (at, resource))

    def pop(self):
        return heapq.heappop(self.heap)

    def load(self, resource) -> int:
        return len(self.inflight[resource])

    def snapshot(self) -> dict:
        return {r: t for t, r in self.heap}


@dataclass
class Allocation:
    resource: str
    start: float
    completion: float


PT = Union[float, Callable[[str], float]]


def allocate_resource(activity: str, enabled: float, queue: ResourceQueue, pt: PT,
                      rng: np.random.Generator, model: SimulationModel, samplers: dict) -> Allocation:
    """Probabilistic allocation of one enabled activity instance (times in epoch seconds).

    Capable resources already operational at enablement are candidates and one is
    chosen uniformly; otherwise the earliest capable resource is taken. ``pt`` is
    a processing time in seconds or a callable drawing one for the chosen resource.
    """
    capable = set(model.capable(activity))
    if not capable:
        raise ModelError(f"no resource can perform activity {activity!r}")
    aside, candidates, earliest_late = [], [], None
    while queue.heap:
        sigma, r = queue.pop()
        if r not in capable:
            aside.append((sigma, r))
            continue
        if sigma > enabled:
            earliest_late = (sigma, r)
            break
        candidates.append((sigma, r))
    if candidates:
        pick = int(rng.integers(len(candidates))) if len(candidates) > 1 else 0
        sigma, r = candidates.pop(pick)
        aside.extend(candidates)
        if earliest_late is not None:
            aside.append(earliest_late)
    else:
        sigma, r = earliest_late
    for item in aside:
        queue.push(item[1], item[0])

    sampler = samplers[r]
    start = sampler.next_available_s(max(enabled, sigma))
    duration = pt(r) if callable(pt) else float(pt)
    completion = sampler.adjust_s(start, duration)

    running = [c for c in queue.inflight[r] if c > start]
    running.append(completion)
    queue.inflight[r] = running
    profile = model.profiles[r]
    if can_multitask(profile.mdpd_at(start), len(running), rng):
        queue.push(r, start)
    else:
        queue.push(r, sampler.next_available_s(max(running)))
    return Allocation(r, start, completion)


class ProbabilisticAllocator:
    def __init__(self, model: SimulationModel, rng: np.random.Generator, origin: float):
        self.model = model
        self.rng = rng
        self.samplers = {r: AvailabilitySampler(p.avail, mode=model.availability_mode, rng=rng)
                         for r, p in model.profiles.items()}
        self.queue = ResourceQueue.of(model.resources, origin)

    def __call__(self, activity, enabled):
        draw = lambda r: self.model.profiles[r].perf[activity].sample(self.rng)
        a = allocate_resource(activity, enabled, self.queue, draw, self.rng, self.model, self.samplers)
        return a.resource, a.start, a.completion


# token game -------------------------------------------------------------------------

_COMPLETE, _ENABLE = 0, 1


def run_token_game(model: SimulationModel, rng: np.random.Generator, arrivals, allocator) -> EventLog:
    """Play every case through the graph, asking ``allocator(activity, enabled)``
    for (resource, start, completion) whenever an activity instance is enabled.
    """
    graph = model.graph
    heap, seq = [], 0
    visits = [dict() for _ in arrivals]
    join_tokens = [dict() for _ in arrivals]
    records = [[] for _ in arrivals]
    arrival_s = [to_seconds(a) for a in arrivals]

    def push(t, kind, case, node_id, payload=None):
        nonlocal seq
        heapq.heappush(heap, (t, kind, case, node_id, seq, payload))
        seq += 1

    def fire(case, flow_ids, t):
        stack = list(reversed(sorted(flow_ids, key=lambda i: graph.flows[i].target)))
        while stack:
            fi = stack.pop()
            node = graph.node(graph.flows[fi].target)
            count = visits[case].get(node.id, 0) + 1
            if count > model.max_iterations:
                raise SimulationError(f"case {case}: node {node.id!r} visited more than "
                                      f"{model.max_iterations} times")
            visits[case][node.id] = count
            nxt = []
            if node.type == "task":
                push(t, _ENABLE, case, node.id)
            elif node.type == "xor":
                outs = graph.outgoing(node.id)
                if len(outs) == 1:
                    nxt = outs
                else:
                    probs = np.array([graph.flows[i].probability or 0.0 for i in outs])
                    nxt = [outs[int(rng.choice(len(outs), p=probs / probs.sum()))]]
            elif node.type == "and":
                ins = graph.incoming(node.id)
                if len(ins) > 1:
                    held = join_tokens[case].setdefault(node.id, {})
                    held[fi] = held.get(fi, 0) + 1
                    if all(held.get(i, 0) > 0 for i in ins):
                        for i in ins:
                            held[i] -= 1
                        nxt = graph.outgoing(node.id)
                else:
                    nxt = graph.outgoing(node.id)
            stack.extend(reversed(sorted(nxt, key=lambda i: graph.flows[i].target)))

    start_flows = graph.outgoing(graph.start.id)
    for case, t in enumerate(arrival_s):
        push(t, _COMPLETE, case, graph.start.id, start_flows)

    while heap:
        t, kind, case, node_id, _, payload = heapq.heappop(heap)
        if kind == _COMPLETE:
            fire(case, payload, t)
            continue
        activity = graph.node(node_id).label
        resource, start, completion = allocator(activity, t)
        records[case].append((activity, resource, t, start, completion))
        push(completion, _COMPLETE, case, node_id, graph.outgoing(node_id))

    width = len(str(len(arrivals)))
    traces = []
    for case, recs in enumerate(records):
        cid = f"case_{case + 1:0{width}d}"
        events = tuple(Event(cid, a, r, from_seconds(s), from_seconds(c), from_seconds(e))
                       for a, r, e, s, c in recs)
        if not events:
            raise SimulationError(f"case {cid} produced no activity instances")
        traces.append(Trace.build(cid, events, arrivals[case]))
    return EventLog(tuple(traces))


def simulate(model: SimulationModel, seed: int = 0, arrivals=None) -> EventLog:
    """Run ``model`` once; ``arrivals`` (datetimes) replaces sampled case creation."""
    model.validate()
    rng = np.random.default_rng(seed)
    if arrivals is None:
        arrivals = sample_arrivals(model, rng)
    arrivals = sorted(arrivals)
    origin = min(to_seconds(model.start_at), to_seconds(arrivals[0]))
    return run_token_game(model, rng, arrivals, ProbabilisticAllocator(model, rng, origin))
