"""Ready-made models for demos and tests."""

import math
from datetime import datetime, timezone

from .calendar import WEEKDAYS, ProbabilisticCalendar
from .distributions import DistributionSpec
from .model import ArrivalModel, Flow, Node, ProcessGraph, ResourceProfile, SimulationModel
from .multitask import SINGLE_TASK

MONDAY = datetime(2024, 1, 1, tzinfo=timezone.utc)
WORKDAYS = WEEKDAYS[:5]


def office_hours(start="09:00", end="17:00", days=WORKDAYS, granule_minutes=60):
    return ProbabilisticCalendar.crisp([(d, start, end) for d in days], granule_minutes)


def single_activity_model(pt: DistributionSpec, calendar=None, interarrival=None, case_count=10,
                          multi=SINGLE_TASK, windows=None, resource="R1", activity="A",
                          batch_times=(), batch_size=1, start_at=MONDAY):
    """One resource performing one activity per case."""
    calendar = calendar or ProbabilisticCalendar.constant(1.0)
    interarrival = interarrival or DistributionSpec.fixed(3600.0)
    arrival = ArrivalModel(interarrival, windows or ArrivalModel.windows, tuple(batch_times), batch_size)
    profile = ResourceProfile(resource, {activity: pt}, calendar, multi)
    return SimulationModel(ProcessGraph.sequence([activity]), {resource: profile}, arrival, case_count, start_at)


LOAN_ACTIVITIES = (
    "Submit application", "Check completeness", "Request missing documents",
    "Check credit history", "Assess income", "Assess application", "Notify rejection",
    "Prepare offer", "Send offer", "Cancel application", "Receive signed contract",
    "Verify contract", "Approve loan", "Open account", "Schedule disbursement",
    "Disburse funds", "Close case",
)

# role -> (headcount, activities, working window)
LOAN_ROLES = {
    "clerk": (18, (0, 1, 2, 6, 9, 16), ("08:00", "16:00")),
    "credit": (12, (3, 4, 5), ("09:00", "17:00")),
    "sales": (10, (7, 8, 10), ("09:00", "18:00")),
    "legal": (8, (11, 12), ("10:00", "16:00")),
    "finance": (6, (13, 14, 15), ("08:00", "14:00")),
}

# activity index -> mean minutes
LOAN_MEANS = {0: 10, 1: 15, 2: 20, 3: 30, 4: 25, 5: 40, 6: 10, 7: 35, 8: 10, 9: 10,
              10: 15, 11: 30, 12: 20, 13: 25, 14: 15, 15: 20, 16: 5}


def _loan_graph():
    t = {i: f"t{i}" for i in range(len(LOAN_ACTIVITIES))}
    nodes = [Node("start", "start"), Node("end", "end")]
    nodes += [Node(t[i], "task", a) for i, a in enumerate(LOAN_ACTIVITIES)]
    nodes += [Node(g, kind) for g, kind in (("x_complete", "xor"), ("x_merge", "xor"), ("p_checks", "and"),
                                             ("j_checks", "and"), ("x_decision", "xor"), ("x_offer", "xor"),
                                             ("p_payout", "and"), ("j_payout", "and"), ("x_end", "xor"))]
    f = Flow
    flows = [
        f("start", t[0]), f(t[0], "x_merge"), f("x_merge", t[1]), f(t[1], "x_complete"),
        f("x_complete", t[2], 0.2), f("x_complete", "p_checks", 0.8), f(t[2], "x_merge"),
        f("p_checks", t[3]), f("p_checks", t[4]), f(t[3], "j_checks"), f(t[4], "j_checks"),
        f("j_checks", t[5]), f(t[5], "x_decision"),
        f("x_decision", t[6], 0.3), f("x_decision", t[7], 0.7), f(t[6], "x_end"),
        f(t[7], t[8]), f(t[8], "x_offer"),
        f("x_offer", t[9], 0.15), f("x_offer", t[10], 0.85), f(t[9], "x_end"),
        f(t[10], t[11]), f(t[11], t[12]), f(t[12], "p_payout"),
        f("p_payout", t[13]), f("p_payout", t[14]), f(t[13], "j_payout"), f(t[14], "j_payout"),
        f("j_payout", t[15]), f(t[15], t[16]), f(t[16], "x_end"), f("x_end", "end"),
    ]
    return ProcessGraph(tuple(nodes), tuple(flows))


def loan_model(case_count=2000, start_at=MONDAY) -> SimulationModel:
    """A loan-application process: 17 activities, 54 resources in five roles."""
    profiles = {}
    for role, (headcount, acts, (lo, hi)) in LOAN_ROLES.items():
        for k in range(1, headcount + 1):
            name = f"{role}_{k:02d}"
            perf = {}
            for i in acts:
                mean = LOAN_MEANS[i] * 60.0 * (0.8 + 0.4 * (k % 5) / 4)
                perf[LOAN_ACTIVITIES[i]] = _lognormal(mean, 0.5)
            profiles[name] = ResourceProfile(name, perf, office_hours(lo, hi))
    arrival = ArrivalModel(DistributionSpec("exponential", {"mean": 600.0}),
                           tuple((d, "08:00", "17:00") for d in WORKDAYS))
    return SimulationModel(_loan_graph(), profiles, arrival, case_count, start_at).validate()


def _lognormal(mean, sigma):
    return DistributionSpec("lognormal", {"mu": math.log(mean) - sigma ** 2 / 2, "sigma": sigma})
