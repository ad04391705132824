"""Canonical (ranking-prefix) schedules driven by a per-class profile."""

from __future__ import annotations

import math
import random

from .belady import BeladyRanking
from .core import CostLedger, InfeasibleSchedule, RequestTrace

TOL = 1e-9


class RankingTimeline:
    """Belady rankings of every class, advanced one global request at a time."""

    def __init__(self, trace: RequestTrace):
        self.trace = trace
        self.rankings = [BeladyRanking(trace.class_requests(j), trace.universe[j])
                         for j in range(trace.num_classes)]
        self.t = 0

    def orders(self):
        return [r.order for r in self.rankings]

    def position(self, page):
        return self.rankings[self.trace.owner[page]].position(page)

    def step(self):
        j, page = self.trace.requests[self.t]
        q, _ = self.rankings[j].step()
        self.t += 1
        return j, q


def canonical_config(masses, orders, k=None, tol=TOL):
    """Cache content holding, per class, the first ``masses[j]`` ranked pages.

    ``masses`` is in page units; a fractional tail is held of the next page.
    Returns a dict page -> mass.
    """
    if k is not None and sum(masses) > k + tol * max(1, k):
        raise ValueError("profile exceeds cache size")
    conf = {}
    for m, order in zip(masses, orders):
        if m < -tol:
            raise ValueError("negative class mass")
        if m > len(order) + tol:
            raise ValueError("class mass exceeds class universe")
        full = math.floor(m + tol)
        full = min(full, len(order))
        for p in order[:full]:
            conf[p] = 1
        frac = m - full
        if frac > tol and full < len(order):
            conf[order[full]] = frac
    return conf


def profile_to_pages(profile, k):
    return [[k * x for x in row] for row in profile]


def _check_simplex(row, tol=1e-9):
    if any(x < -tol for x in row) or abs(sum(row) - 1) > tol:
        raise ValueError("profile row not on the simplex")


def _diff_cost(trace, prev, cur, ledger):
    for p in set(prev) | set(cur):
        d = cur.get(p, 0) - prev.get(p, 0)
        w = trace.weight_of(p)
        if d > 0:
            ledger.load_cost += w * d
        elif d < 0:
            ledger.evict_cost += -w * d


def run_canonical(trace: RequestTrace, profile, initial=None, units="fraction", tol=1e-9):
    """Serve the trace with the canonical algorithm of a profile.

    ``profile[t]`` is the class split after request ``t`` (fractions summing
    to 1, or page units when ``units='pages'``).  ``initial`` is the split
    before the first request (empty cache if None).  Returns the ledger, with
    ``movement_cost`` and ``service_cost`` set to the two-step decomposition
    (class-mass change under the old ranking, then ranking change).
    """
    k = trace.k
    rows = profile if units == "pages" else profile_to_pages(profile, k)
    if units != "pages":
        for row in profile:
            _check_simplex(row)
    tl = RankingTimeline(trace)
    ledger = CostLedger()
    prev_m = [0] * trace.num_classes if initial is None else list(initial)
    prev = canonical_config(prev_m, tl.orders())
    if initial is not None:
        ledger.initial_fill = sum(trace.weight_of(p) * m for p, m in prev.items())
        ledger.load_cost = ledger.initial_fill
    for t, m in enumerate(rows):
        r = trace.requests[t][0]
        pos = tl.position(trace.requests[t][1])
        mv = sum(trace.weights[i] * max(0.0, m[i] - prev_m[i]) for i in range(len(m)))
        tl.step()
        cur = canonical_config(m, tl.orders())
        if cur.get(trace.requests[t][1], 0) < 1 - tol:
            raise InfeasibleSchedule(f"requested page not fully cached at time {t}")
        ledger.movement_cost += mv
        ledger.service_cost += trace.weights[r] * min(1.0, max(0.0, pos - m[r]))
        _diff_cost(trace, prev, cur, ledger)
        prev, prev_m = cur, m
    return ledger


def canonicalize(trace: RequestTrace, states, tol=1e-9):
    """Replace a feasible fractional schedule by the canonical one of its profile.

    ``states[t]`` maps page -> mass after request t; the cache starts empty.
    Costs count both loads and evictions.  Returns (canonical states,
    input cost, canonical cost).
    """
    L = trace.num_classes
    tl = RankingTimeline(trace)
    prev_in, prev_out = {}, {}
    cin, cout = CostLedger(), CostLedger()
    out_states = []
    for t, st in enumerate(states):
        _, q = trace.requests[t]
        if st.get(q, 0) < 1 - tol:
            raise InfeasibleSchedule(f"input schedule misses the request at time {t}")
        if sum(st.values()) > trace.k + tol:
            raise InfeasibleSchedule(f"input schedule over capacity at time {t}")
        masses = [0.0] * L
        for p, m in st.items():
            masses[trace.owner[p]] += m
        tl.step()
        cur = canonical_config(masses, tl.orders())
        _diff_cost(trace, prev_in, st, cin)
        _diff_cost(trace, prev_out, cur, cout)
        out_states.append(cur)
        prev_in, prev_out = st, cur
    in_cost = cin.load_cost + cin.evict_cost
    out_cost = cout.load_cost + cout.evict_cost
    if out_cost > 3 * in_cost + tol * max(1.0, in_cost):
        raise AssertionError("canonical schedule costs more than three times the input")
    return out_states, in_cost, out_cost


def canonicalize_integral(trace: RequestTrace, counts):
    """Load-cost ledger of the canonical schedule with integral class counts."""
    return run_canonical(trace, counts, units="pages")


def round_online(trace: RequestTrace, profile, seed, units="pages", tol=1e-9):
    """Randomly round a canonical fractional schedule to an integral one.

    A single uniform U drives systematic sampling across the classes'
    fractional tails, so exactly k pages are held and the tail page of class
    j is held with probability equal to its fractional mass.  U is redrawn
    only when some class's tail page changes identity.
    """
    rng = random.Random(seed)
    rows = profile if units == "pages" else profile_to_pages(profile, trace.k)
    tl = RankingTimeline(trace)
    u = rng.random()
    tails = None
    out = []
    for t, m in enumerate(rows):
        tl.step()
        orders = tl.orders()
        full = [min(len(o), math.floor(x + tol)) for x, o in zip(m, orders)]
        fr = [max(0.0, x - f) if f < len(o) else 0.0 for x, f, o in zip(m, full, orders)]
        new_tails = tuple(o[f] if f < len(o) and fr_ > tol else None
                          for o, f, fr_ in zip(orders, full, fr))
        if tails is not None and new_tails != tails:
            u = rng.random()
        tails = new_tails
        cache = set()
        acc = 0.0
        for j, o in enumerate(orders):
            cache.update(o[:full[j]])
            lo, hi = acc, acc + fr[j]
            # class j gets its tail iff some point u + i lies in [lo, hi)
            if fr[j] > tol and math.ceil(hi - u) - math.ceil(lo - u) >= 1:
                cache.add(o[full[j]])
            acc = hi
        out.append(frozenset(cache))
    return out
