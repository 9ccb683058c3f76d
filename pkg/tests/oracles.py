"""Independent reference implementations used to check the library."""

import itertools
from fractions import Fraction


def w1_bruteforce(a, b):
    """Equal-length 1-D earth mover's distance by trying every assignment."""
    assert len(a) == len(b)
    n = len(a)
    return min(sum(abs(a[i] - b[p[i]]) for i in range(n)) for p in itertools.permutations(range(n))) / n


def w1_quantile_grid(a, b, steps=20000):
    """Integrate |Qa - Qb| on a midpoint grid (handles unequal lengths)."""
    a, b = sorted(a), sorted(b)
    total = 0.0
    for k in range(steps):
        u = (k + 0.5) / steps
        total += abs(a[min(int(u * len(a)), len(a) - 1)] - b[min(int(u * len(b)), len(b) - 1)])
    return total / steps


def levels_bruteforce(intervals):
    """Concurrency seen by each start: count intervals active at that instant.

    Ties are broken by input order among intervals starting at the same instant,
    matching a sweep that processes ends before starts.
    """
    freqs = {}
    for i, (s, e) in enumerate(intervals):
        active = 1
        for j, (s2, e2) in enumerate(intervals):
            if j == i:
                continue
            started = s2 < s or (s2 == s and j < i)
            running = e2 > s or (e2 == s2 == s and j < i)
            if started and running:
                active += 1
        freqs[active] = freqs.get(active, 0) + 1
    return freqs


def mdpd_reference(freqs):
    n = max(k for k, v in freqs.items() if v > 0)
    total = sum(freqs.get(j, 0) for j in range(1, n + 1))
    return [Fraction(sum(freqs.get(j, 0) for j in range(i, n + 1)), total) for i in range(1, n + 1)]


def weighted_overlap(start, end, granule_seconds, prob_of_granule):
    """Second-by-second weighted duration (slow but obvious)."""
    total = 0.0
    t = start
    while t < end:
        total += prob_of_granule(int(t // granule_seconds))
        t += 1
    return total


def trapezoid_reference(m, beta):
    """Two-pointer walk from both ends, lowering the weight by the step each time."""
    if m == 1:
        return [1.0]
    f = 1.0 / (m // 2) * beta if beta > 0 else 1.0
    w = [None] * m
    lo, hi, p = 0, m - 1, 1.0
    while lo <= hi:
        w[lo] = w[hi] = max(p, 0.0)
        lo, hi, p = lo + 1, hi - 1, p - f
    return w


def calendar_counts_reference(log, granule_minutes, beta):
    """Minute-stepping re-derivation of the availability tallies.

    Returns {resource: (weight[7][n], required[7][n])} as nested lists.
    """
    from datetime import timedelta

    n = 1440 // granule_minutes

    def granules(a, b):
        """Dated granules touched by [a, b) (a zero-length span touches a's granule)."""
        out = []
        t = a
        while True:
            key = (t.date(), (t.hour * 60 + t.minute) // granule_minutes)
            if not out or out[-1] != key:
                out.append(key)
            t += timedelta(minutes=1)
            if t >= b:
                break
        return out

    resources = sorted(log.resources)
    weight = {r: [[0.0] * n for _ in range(7)] for r in resources}
    required = {r: [[0.0] * n for _ in range(7)] for r in resources}
    capable = {}
    busy = {r: set() for r in resources}
    for e in log.events():
        capable.setdefault(e.activity, set()).add(e.resource)
        busy[e.resource].update(granules(e.started_at, e.completed_at))
    for e in log.events():
        passes = []
        if e.enabled_at < e.started_at:
            passes.append((granules(e.enabled_at, e.started_at), False))
        passes.append((granules(e.started_at, e.completed_at), True))
        for gs, allocated in passes:
            w = trapezoid_reference(len(gs), beta)
            if len(gs) == 1:
                gs, w = gs * 2, w * 2
            for (day, idx), p in zip(gs, w):
                wd = day.weekday()
                for c in sorted(capable[e.activity]):
                    if (day, idx) not in busy[c]:
                        required[c][wd][idx] += 1
                if allocated:
                    weight[e.resource][wd][idx] += p
                    required[e.resource][wd][idx] += 1
    return {r: (weight[r], required[r]) for r in resources}
