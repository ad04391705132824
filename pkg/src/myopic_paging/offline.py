"""Exact offline optimum for weighted paging."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import networkx as nx

from .core import RequestTrace, validate_schedule


class BudgetExceeded(ValueError):
    pass


@dataclass
class OfflineSchedule:
    states: list  # frozenset of pages after each request
    cost: object

    def to_json(self):
        return json.dumps({str(t): sorted(map(str, s)) for t, s in enumerate(self.states)},
                          sort_keys=False)

    def class_counts(self, trace):
        out = []
        for s in self.states:
            row = [0] * trace.num_classes
            for p in s:
                row[trace.owner[p]] += 1
            out.append(row)
        return out


def opt_bruteforce(trace: RequestTrace, k=None, with_schedule=False, budget=True):
    """Minimum load cost by dynamic programming over lazy cache states."""
    k = trace.k if k is None else k
    n = len(trace.owner)
    if budget and (n > 10 or k > 5 or len(trace.requests) > 25):
        raise BudgetExceeded("instance exceeds the brute-force budget")
    layer = {frozenset(): (0, None)}
    history = []
    for _, q in trace.requests:
        w = trace.weight_of(q)
        nxt = {}
        for state, (cost, _) in layer.items():
            if q in state:
                cands = [(state, cost)]
            elif len(state) < k:
                cands = [(state | {q}, cost + w)]
            else:
                cands = [((state - {v}) | {q}, cost + w) for v in state]
            for s2, c2 in cands:
                old = nxt.get(s2)
                if old is None or c2 < old[0]:
                    nxt[s2] = (c2, state)
        history.append(nxt)
        layer = nxt
    best_state = min(layer, key=lambda s: (layer[s][0], sorted(map(str, s))))
    best = layer[best_state][0]
    if not with_schedule:
        return best
    states = []
    s = best_state
    for nxt in reversed(history):
        states.append(s)
        s = nxt[s][1]
    return best, OfflineSchedule(states[::-1], best)


def _scale(weights):
    den = 1
    for w in weights:
        den = math.lcm(den, Fraction(w).limit_denominator(10 ** 12).denominator)
    return den


def opt_mincostflow(trace: RequestTrace, k=None):
    """Optimum via the interval formulation solved as a min-cost flow.

    Holding page p between two consecutive requests at t < t' saves one load
    of p and occupies a slot at every time strictly between them.  With k-1
    free slots per time this is a flow of value k-1 along a time line.
    """
    k = trace.k if k is None else k
    reqs = trace.requests
    T = len(reqs)
    if T == 0:
        return 0, OfflineSchedule([], 0)
    den = _scale(trace.weights.weights)
    iw = {p: int(Fraction(trace.weight_of(p)).limit_denominator(10 ** 12) * den)
          for p in trace.owner}
    total = sum(trace.weight_of(p) for _, p in reqs)
    last = {}
    intervals = []  # (t, t', page)
    for t, (_, p) in enumerate(reqs):
        if p in last:
            intervals.append((last[p], t, p))
        last[p] = t
    kept = set()
    saving = 0
    flow_arcs = []
    for (a, b, p) in intervals:
        if b == a + 1:
            kept.add((a, b))
            saving += trace.weight_of(p)
        elif k > 1:
            flow_arcs.append((a, b, p))
    if flow_arcs:
        g = nx.DiGraph()
        for s in range(T + 1):
            g.add_node(("n", s), demand=0)
        g.nodes[("n", 0)]["demand"] = -(k - 1)
        g.nodes[("n", T)]["demand"] = k - 1
        for s in range(T):
            g.add_edge(("n", s), ("n", s + 1), capacity=k - 1, weight=0)
        # interval (a, b) occupies times a+1..b-1: arc from node a+1 to node b,
        # split through a mid node so parallel arcs stay distinct
        for idx, (a, b, p) in enumerate(flow_arcs):
            mid = ("i", idx)
            g.add_node(mid, demand=0)
            g.add_edge(("n", a + 1), mid, capacity=1, weight=-iw[p])
            g.add_edge(mid, ("n", b), capacity=1, weight=0)
        _, flow = nx.network_simplex(g)
        for idx, (a, b, p) in enumerate(flow_arcs):
            if flow[("n", a + 1)][("i", idx)] > 0:
                kept.add((a, b))
                saving += trace.weight_of(p)
    cost = total - saving
    held = [set() for _ in range(T)]
    for t, (_, p) in enumerate(reqs):
        held[t].add(p)
    for (a, b, p) in intervals:
        if (a, b) in kept:
            for s in range(a + 1, b):
                held[s].add(p)
    states = [frozenset(h) for h in held]
    ledger = validate_schedule(trace, states)
    if ledger.load_cost != cost:
        raise RuntimeError("recovered schedule cost differs from flow objective")
    return cost, OfflineSchedule(states, cost)


def make_lazy(trace: RequestTrace, states):
    """Lazy version of a feasible integral schedule (fetch only on request)."""
    out = []
    cur = set()
    for t, (_, q) in enumerate(trace.requests):
        target = set(states[t])
        cur = cur & target
        cur.add(q)
        out.append(frozenset(cur))
    return out


def canonical_offline_profile(schedule: OfflineSchedule, trace: RequestTrace):
    """Per-class page counts of a schedule and the cost of its canonical version."""
    from .canonical import canonicalize_integral

    counts = schedule.class_counts(trace)
    canon = canonicalize_integral(trace, counts)
    bound = 3 * schedule.cost + trace.weights.total * trace.k
    if canon.load_cost > bound:
        raise AssertionError("canonical offline exceeds 3x plus additive slack")
    return counts, canon
