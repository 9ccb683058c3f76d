from collections import Counter
from datetime import timedelta

import pytest
from hypothesis import given, settings, strategies as st

from conftest import at, ev, log_of
from prosim.calendar import ProbabilisticCalendar
from prosim.distributions import DistributionSpec
from prosim.examples import loan_model
from prosim.model import ArrivalModel, ProcessGraph, ResourceProfile, SimulationModel
from prosim.synthgen import (GenerationConfig, PerturbationConfig, anchor_datetime, generate_synthetic_log,
                             group_schedule, inject_unavailability, shift_after)


def pool_model(n_resources, cases, pt=600.0):
    cal = ProbabilisticCalendar.constant(1.0)
    profiles = {f"R{i}": ResourceProfile(f"R{i}", {"A": DistributionSpec.fixed(pt)}, cal) for i in range(n_resources)}
    return SimulationModel(ProcessGraph.sequence(["A"]), profiles, ArrivalModel(DistributionSpec.fixed(60.0)),
                           cases, at())


def test_balanced_round_robin():
    log = generate_synthetic_log(GenerationConfig(pool_model(2, 10), "balanced", seed=0))
    assert Counter(e.resource for e in log.events()) == {"R0": 5, "R1": 5}


def test_unbalanced_groups_of_21():
    log = generate_synthetic_log(GenerationConfig(pool_model(6, 21), "unbalanced", seed=0))
    assert sorted(Counter(e.resource for e in log.events()).values()) == [1, 2, 3, 4, 5, 6]


def test_unbalanced_any_window_of_21():
    log = generate_synthetic_log(GenerationConfig(pool_model(6, 100), "unbalanced", seed=0))
    order = [e.resource for e in sorted(log.events(), key=lambda e: (e.enabled_at, e.case_id))]
    for i in range(len(order) - 20):
        assert sorted(Counter(order[i:i + 21]).values()) == [1, 2, 3, 4, 5, 6]


def test_unbalanced_fewer_resources_degrades():
    log = generate_synthetic_log(GenerationConfig(pool_model(3, 60), "unbalanced", seed=0))
    assert sorted(Counter(e.resource for e in log.events()).values()) == [10, 20, 30]
    assert group_schedule(3).count(2) == 3 and len(group_schedule(6)) == 21


def test_loan_2000_cases():
    log = generate_synthetic_log(GenerationConfig(loan_model(), "balanced", seed=3))
    assert len(log.traces) == 2000
    assert len(log.activities) == 17 and len(log.resources) == 54
    assert 20000 < log.event_count < 27000
    m = loan_model()
    for t in log.traces[:300]:
        assert m.graph.is_valid_path([e.activity for e in sorted(t.events, key=lambda e: (e.enabled_at, e.started_at))]) \
            or m.graph.is_valid_path([e.activity for e in t.events])


def test_generation_is_sequential_and_crisp():
    m = loan_model(case_count=300)
    log = generate_synthetic_log(GenerationConfig(m, "unbalanced", seed=1))
    spans = {}
    for e in log.events():
        assert e.enabled_at <= e.started_at <= e.completed_at
        spans.setdefault(e.resource, []).append((e.started_at, e.completed_at))
        cal = m.profiles[e.resource].avail
        assert cal.p_abs[e.started_at.weekday(), e.started_at.hour] == 1.0
    for ss in spans.values():
        ss.sort()
        assert all(a[1] <= b[0] for a, b in zip(ss, ss[1:]))


def test_overlap_mode_produces_concurrency():
    m = pool_model(1, 6, pt=3600.0)
    log = generate_synthetic_log(GenerationConfig(m, seed=0, overlap=True))
    starts = sorted(e.started_at for e in log.events())
    assert starts[1] - starts[0] == timedelta(minutes=1)


def test_generation_deterministic():
    cfg = GenerationConfig(loan_model(case_count=100), "balanced", seed=9)
    assert generate_synthetic_log(cfg) == generate_synthetic_log(cfg)


def sample_log():
    return log_of(*[ev(f"c{i}", "A", "R", at(i, 9), at(i, 10)) for i in range(10)])


def test_train_shift_one_week():
    log = sample_log()
    out = inject_unavailability(log, PerturbationConfig("TRAIN", 1))
    anchor = anchor_datetime(log, 0.10)
    before = sorted(x for e in log.events() for x in (e.started_at, e.completed_at))
    after = sorted(x for e in out.events() for x in (e.started_at, e.completed_at))
    assert after == sorted(x + timedelta(days=7) if x >= anchor else x for x in before)
    assert after[-1] - after[0] == before[-1] - before[0] + timedelta(days=7)


def test_tnt_doubles_growth():
    log = sample_log()
    out = inject_unavailability(log, PerturbationConfig("T&T", 1))
    span = lambda lg: max(e.completed_at for e in lg.events()) - min(e.started_at for e in lg.events())
    assert span(out) == span(log) + timedelta(days=14)


def test_shift_is_invertible():
    log = sample_log()
    anchor = anchor_datetime(log, 0.10)
    out = inject_unavailability(log, PerturbationConfig("TRAIN", 1))
    back = shift_after(out, [anchor + timedelta(days=7)], -timedelta(days=7))
    assert back == log


def test_invalid_configs():
    with pytest.raises(ValueError):
        PerturbationConfig("TRAIN", 0)
    with pytest.raises(ValueError):
        PerturbationConfig("SOMETIME", 1)
    with pytest.raises(ValueError):
        PerturbationConfig("TEST", 1, test_anchor=1.0)
    one = log_of(ev("c", "A", "R", at(), at()))
    with pytest.raises(ValueError):
        inject_unavailability(one, PerturbationConfig("TRAIN", 1))


def test_relabel_mode():
    log = log_of(*[ev(f"c{i}", "A", "R" if i % 2 else "S", at(i, 9), at(i, 10)) for i in range(20)])
    out = inject_unavailability(log, PerturbationConfig("TEST", 1, resource="R", substitute="S"))
    anchor = anchor_datetime(log, 0.60)
    for a, b in zip(log.events(), out.events()):
        assert (a.started_at, a.completed_at) == (b.started_at, b.completed_at)
        moved = a.resource == "R" and anchor <= a.started_at < anchor + timedelta(weeks=1)
        assert b.resource == ("S" if moved else a.resource)
    assert any(a.resource != b.resource for a, b in zip(log.events(), out.events()))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5000), st.integers(1, 300)), min_size=3, max_size=15),
       st.sampled_from(["TRAIN", "TEST"]), st.integers(1, 8))
def test_cycle_times_kept_away_from_anchor(spans, scenario, weeks):
    log = log_of(*[ev(f"c{i}", "A", "R", at(0, 0, s), at(0, 0, s + d)) for i, (s, d) in enumerate(spans)])
    cfg = PerturbationConfig(scenario, weeks)
    try:
        anchor = anchor_datetime(log, cfg.anchors[0])
    except ValueError:
        return
    out = inject_unavailability(log, cfg)
    old = {t.case_id: t for t in log.traces}
    for t in out.traces:
        o = old[t.case_id]
        whole_before = max(e.completed_at for e in o.events) < anchor
        whole_after = o.arrival_at >= anchor
        if whole_before or whole_after:
            assert t.cycle_time == o.cycle_time
