"""Simulation model: process graph, resource profiles, arrivals, and the JSON model file."""

import json
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime
from typing import Optional, Union

from .calendar import WEEKDAYS, ProbabilisticCalendar, TimeGranularity
from .distributions import DistributionSpec
from .eventlog import format_datetime, parse_datetime
from .multitask import MDPD, SINGLE_TASK, GlobalMultitask, LocalMultitask

SCHEMA_VERSION = 1
NODE_TYPES = ("start", "end", "task", "xor", "and")


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    id: str
    type: str
    activity: Optional[str] = None

    @property
    def label(self):
        return self.activity or self.id


@dataclass(frozen=True)
class Flow:
    source: str
    target: str
    probability: Optional[float] = None


@dataclass(frozen=True)
class ProcessGraph:
    nodes: tuple
    flows: tuple

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "flows", tuple(self.flows))
        by_id = {n.id: n for n in self.nodes}
        out, inc = {n.id: [] for n in self.nodes}, {n.id: [] for n in self.nodes}
        for i, f in enumerate(self.flows):
            if f.source not in by_id or f.target not in by_id:
                raise ModelError(f"flow {f.source}->{f.target} references an unknown node")
            out[f.source].append(i)
            inc[f.target].append(i)
        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(self, "_out", out)
        object.__setattr__(self, "_in", inc)

    def node(self, node_id) -> Node:
        return self._by_id[node_id]

    def outgoing(self, node_id):
        return self._out[node_id]

    def incoming(self, node_id):
        return self._in[node_id]

    @property
    def start(self) -> Node:
        return next(n for n in self.nodes if n.type == "start")

    @property
    def activities(self):
        return sorted({n.label for n in self.nodes if n.type == "task"})

    def validate(self):
        if len(set(self._by_id)) != len(self.nodes):
            raise ModelError("duplicate node ids")
        for n in self.nodes:
            if n.type not in NODE_TYPES:
                raise ModelError(f"node {n.id!r} has unknown type {n.type!r}")
        starts = [n for n in self.nodes if n.type == "start"]
        ends = [n for n in self.nodes if n.type == "end"]
        if len(starts) != 1:
            raise ModelError(f"expected exactly one start event, found {len(starts)}")
        if not ends:
            raise ModelError("process graph has no end event")
        for n in self.nodes:
            if n.type == "start" and (self._in[n.id] or not self._out[n.id]):
                raise ModelError("start event must have only outgoing flows")
            if n.type == "end" and self._out[n.id]:
                raise ModelError(f"end event {n.id!r} has outgoing flows")
            if n.type == "task" and len(self._out[n.id]) != 1:
                raise ModelError(f"activity {n.id!r} must have exactly one outgoing flow")
            if n.type in ("task", "xor", "and") and not self._in[n.id]:
                raise ModelError(f"node {n.id!r} has no incoming flow")
            if n.type == "xor" and len(self._out[n.id]) > 1:
                total = sum(self.flows[i].probability or 0.0 for i in self._out[n.id])
                if abs(total - 1.0) > 1e-9:
                    raise ModelError(f"branching probabilities of {n.id!r} sum to {total}, not 1")
            if n.type == "xor" and not self._out[n.id]:
                raise ModelError(f"gateway {n.id!r} has no outgoing flow")
        reach = self._reach(starts[0].id, self._out, lambda i: self.flows[i].target)
        unreachable = sorted(set(self._by_id) - reach)
        if unreachable:
            raise ModelError(f"nodes unreachable from start: {unreachable}")
        to_end = set()
        for e in ends:
            to_end |= self._reach(e.id, self._in, lambda i: self.flows[i].source)
        dead = sorted(n.id for n in self.nodes if n.type == "task" and n.id not in to_end)
        if dead:
            raise ModelError(f"activities with no path to an end event: {dead}")
        return self

    @staticmethod
    def _reach(origin, adjacency, hop):
        seen, todo = {origin}, deque([origin])
        while todo:
            cur = todo.popleft()
            for i in adjacency[cur]:
                nxt = hop(i)
                if nxt not in seen:
                    seen.add(nxt)
                    todo.append(nxt)
        return seen

    def is_valid_path(self, activities, max_states=200000) -> bool:
        """Whether some token-game run emits ``activities`` in order and then terminates.

        Replays markings (token counts per flow); gateways fire silently.
        """
        seq = list(activities)
        n_flows = len(self.flows)
        first = [0] * n_flows
        for i in self._out[self.start.id]:
            first[i] += 1
        todo, seen = [(tuple(first), 0)], set()
        while todo:
            marking, pos = todo.pop()
            if (marking, pos) in seen:
                continue
            seen.add((marking, pos))
            if len(seen) > max_states:
                raise ModelError("path check exceeded its state budget")
            if pos == len(seq) and not any(marking):
                return True
            for node in self.nodes:
                ins = [i for i in self._in[node.id] if marking[i] > 0]
                if not ins:
                    continue
                if node.type == "and" and len(ins) < len(self._in[node.id]):
                    continue
                if node.type == "task" and (pos >= len(seq) or seq[pos] != node.label):
                    continue
                consume = self._in[node.id] if node.type == "and" else ins
                for taken in ([consume] if node.type == "and" else [[i] for i in consume]):
                    base = list(marking)
                    for i in taken:
                        base[i] -= 1
                    outs = self._out[node.id]
                    if node.type == "xor" and len(outs) > 1:
                        choices = [[o] for o in outs]
                    else:
                        choices = [outs]
                    for emit in choices:
                        nxt = list(base)
                        for o in emit:
                            nxt[o] += 1
                        todo.append((tuple(nxt), pos + (node.type == "task")))
        return False

    def to_dict(self):
        nodes = []
        for n in self.nodes:
            d = {"id": n.id, "type": n.type}
            if n.activity is not None:
                d["activity"] = n.activity
            nodes.append(d)
        flows = []
        for f in self.flows:
            d = {"source": f.source, "target": f.target}
            if f.probability is not None:
                d["probability"] = f.probability
            flows.append(d)
        return {"nodes": nodes, "flows": flows}

    @classmethod
    def from_dict(cls, data):
        nodes = [Node(n["id"], n["type"], n.get("activity")) for n in data["nodes"]]
        flows = [Flow(f["source"], f["target"], f.get("probability")) for f in data["flows"]]
        return cls(tuple(nodes), tuple(flows))

    @classmethod
    def sequence(cls, activities):
        """start -> a1 -> ... -> ak -> end."""
        nodes = [Node("start", "start")] + [Node(f"t{i}", "task", a) for i, a in enumerate(activities)] + [Node("end", "end")]
        flows = [Flow(a.id, b.id) for a, b in zip(nodes, nodes[1:])]
        return cls(tuple(nodes), tuple(flows))


@dataclass(frozen=True)
class ArrivalModel:
    """Inter-arrival distribution restricted to a crisp weekly creation calendar.

    With ``batch_times`` set, cases are created in groups of ``batch_size`` at each
    listed time of day on days the calendar allows.
    """

    interarrival: DistributionSpec
    windows: tuple = tuple((d, "00:00", "24:00") for d in WEEKDAYS)
    batch_times: tuple = ()
    batch_size: int = 1

    def calendar(self) -> ProbabilisticCalendar:
        return ProbabilisticCalendar.crisp(self.windows, granule_minutes=1)

    def to_dict(self):
        d = {"distribution": self.interarrival.to_dict(),
             "calendar": [{"day": day, "from": a, "to": b} for day, a, b in self.windows]}
        if self.batch_times:
            d["batch"] = {"times": list(self.batch_times), "size": self.batch_size}
        return d

    @classmethod
    def from_dict(cls, data):
        windows = tuple((w["day"].upper(), w["from"], w["to"]) for w in data.get("calendar", []))
        batch = data.get("batch") or {}
        return cls(DistributionSpec.from_dict(data["distribution"]), windows,
                   tuple(batch.get("times", ())), int(batch.get("size", 1)))


Multi = Union[MDPD, LocalMultitask]


@dataclass(frozen=True)
class ResourceProfile:
    name: str
    perf: dict  # activity -> DistributionSpec
    avail: ProbabilisticCalendar
    multi: Multi = SINGLE_TASK
    cost_per_hour: float = 0.0

    @property
    def alloc(self) -> frozenset:
        return frozenset(self.perf)

    def mdpd_at(self, t_seconds: float) -> MDPD:
        if isinstance(self.multi, MDPD):
            return self.multi
        gr = self.multi.granularity
        _, wd, idx = gr.split(gr.absolute_granule(t_seconds))
        return self.multi.for_cell(self.name, wd, idx)

    @property
    def max_level(self) -> int:
        if isinstance(self.multi, MDPD):
            return self.multi.max_level
        cells = self.multi.cells.get(self.name, {})
        return max([m.max_level for m in cells.values()] + [1])

    def to_dict(self):
        d = {"activities": {a: s.to_dict() for a, s in sorted(self.perf.items())},
             "calendar": self.avail.to_dict(),
             "cost_per_hour": self.cost_per_hour}
        if isinstance(self.multi, MDPD):
            if self.multi != SINGLE_TASK:
                d["multitask"] = {"global": list(self.multi.probs)}
        else:
            cells = self.multi.cells.get(self.name, {})
            d["multitask"] = {"local": {
                "granule_minutes": self.multi.granularity.granule_minutes,
                "cells": [[s, g, list(m.probs)] for (s, g), m in sorted(cells.items())],
            }}
        return d

    @classmethod
    def from_dict(cls, name, data):
        perf = {a: DistributionSpec.from_dict(s) for a, s in data["activities"].items()}
        multi = SINGLE_TASK
        mt = data.get("multitask")
        if mt and "global" in mt:
            multi = MDPD(tuple(mt["global"]))
        elif mt and "local" in mt:
            loc = mt["local"]
            cells = {(int(s), int(g)): MDPD(tuple(p)) for s, g, p in loc["cells"]}
            multi = LocalMultitask(TimeGranularity(int(loc["granule_minutes"])), {name: cells})
        return cls(name, perf, ProbabilisticCalendar.from_dict(data["calendar"]), multi,
                   float(data.get("cost_per_hour", 0.0)))


@dataclass(frozen=True)
class SimulationModel:
    graph: ProcessGraph
    profiles: dict  # resource -> ResourceProfile
    arrival: ArrivalModel
    case_count: int
    start_at: datetime
    availability_mode: str = "max"
    max_iterations: int = 1000
    metadata: dict = field(default_factory=dict)

    @property
    def resources(self):
        return sorted(self.profiles)

    def capable(self, activity):
        return [r for r in self.resources if activity in self.profiles[r].perf]

    def validate(self):
        self.graph.validate()
        if self.case_count < 1:
            raise ModelError("case_count must be positive")
        if not self.arrival.windows:
            raise ModelError("arrival calendar is empty")
        if self.availability_mode not in ("abs", "rel", "max"):
            raise ModelError(f"unknown availability mode {self.availability_mode!r}")
        for a in self.graph.activities:
            if not self.capable(a):
                raise ModelError(f"no resource can perform activity {a!r}")
        return self

    def with_multitask(self, multi):
        """Copy with every profile's multitasking replaced.

        ``multi`` is None (single-task), a GlobalMultitask or a LocalMultitask.
        """
        profiles = {}
        for r, p in self.profiles.items():
            if multi is None:
                m = SINGLE_TASK
            elif isinstance(multi, GlobalMultitask):
                m = multi.for_resource(r)
            else:
                m = multi.resource_view(r)
            profiles[r] = ResourceProfile(r, p.perf, p.avail, m, p.cost_per_hour)
        return SimulationModel(self.graph, profiles, self.arrival, self.case_count, self.start_at,
                               self.availability_mode, self.max_iterations, dict(self.metadata))

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "start_at": format_datetime(self.start_at),
            "case_count": self.case_count,
            "availability_mode": self.availability_mode,
            "max_iterations": self.max_iterations,
            "graph": self.graph.to_dict(),
            "arrival": self.arrival.to_dict(),
            "resources": {r: self.profiles[r].to_dict() for r in self.resources},
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data):
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ModelError(f"unsupported schema_version {version!r}")
        profiles = {r: ResourceProfile.from_dict(r, d) for r, d in data["resources"].items()}
        return cls(ProcessGraph.from_dict(data["graph"]), profiles, ArrivalModel.from_dict(data["arrival"]),
                   int(data["case_count"]), parse_datetime(data["start_at"]),
                   data.get("availability_mode", "max"), int(data.get("max_iterations", 1000)),
                   dict(data.get("metadata", {})))


def save_model(model: SimulationModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, indent=1, sort_keys=False)
        fh.write("\n")


def load_model(path) -> SimulationModel:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"{path}: not valid JSON ({exc})") from None
    try:
        return SimulationModel.from_dict(data)
    except KeyError as exc:
        raise ModelError(f"{path}: missing field {exc}") from None


def save_calendars(calendars: dict, path) -> None:
    """Standalone calendar file: the per-resource ``calendar`` blocks of the model schema."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"schema_version": SCHEMA_VERSION,
                   "calendars": {r: c.to_dict() for r, c in sorted(calendars.items())}}, fh, indent=1)
        fh.write("\n")


def load_calendars(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return {r: ProbabilisticCalendar.from_dict(c) for r, c in data["calendars"].items()}
