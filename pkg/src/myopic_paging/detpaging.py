"""Deterministic level-based algorithm for myopic weighted paging."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .belady import NextKey
from .core import CostLedger, RequestTrace


class MonitorViolation(AssertionError):
    pass


@dataclass
class LevelState:
    weights: tuple
    k: int
    levels: list
    cache: set = field(default_factory=set)
    owner: dict = field(default_factory=dict)

    @classmethod
    def start(cls, trace: RequestTrace):
        ws = tuple(Fraction(w) for w in trace.weights.weights)
        return cls(ws, trace.k, list(ws), set(), dict(trace.owner))

    def class_count(self, j):
        return sum(1 for p in self.cache if self.owner[p] == j)


def choose_eviction_class(levels, nonempty):
    """Class with least level among those holding pages; ties to the lowest index."""
    cands = [j for j in range(len(levels)) if nonempty[j]]
    if not cands:
        raise RuntimeError("cache empty when an eviction is needed")
    return min(cands, key=lambda j: (levels[j], j))


def det_serve(state: LevelState, page, t, key):
    """Serve one request in place.  ``key(q, t)`` orders pages by next request.

    Returns (evicted page or None, eviction cost, load cost, drained levels).
    """
    if page in state.cache:
        return None, 0, 0, None
    evicted, ecost, drained = None, 0, None
    if len(state.cache) >= state.k:
        L = len(state.levels)
        nonempty = [False] * L
        for p in state.cache:
            nonempty[state.owner[p]] = True
        jj = choose_eviction_class(state.levels, nonempty)
        step = state.levels[jj]
        drained = [step if nonempty[j] else 0 for j in range(L)]
        for j in range(L):
            if nonempty[j] and j != jj:
                state.levels[j] -= step
        cands = [p for p in state.cache if state.owner[p] == jj]
        evicted = max(cands, key=lambda q: key(q, t + 1))
        state.cache.remove(evicted)
        state.levels[jj] = state.weights[jj]
        ecost = state.weights[jj]
    state.cache.add(page)
    return evicted, ecost, state.weights[state.owner[page]], drained


def class_ranks(universe_j, key, t):
    ordered = sorted(universe_j, key=lambda p: key(p, t))
    return {p: i + 1 for i, p in enumerate(ordered)}


def excess(online_j, offline_j, ranks):
    """max over suffixes (including the empty one) of online minus offline count."""
    top = len(ranks)
    diff = [0] * (top + 2)
    for p in online_j:
        diff[ranks[p]] += 1
    for p in offline_j:
        diff[ranks[p]] -= 1
    best = run = 0
    for s in range(top, 0, -1):
        run += diff[s]
        best = max(best, run)
    return best


def det_potential(levels, weights, online, offline, ranks_by_class, owner):
    """Sum over classes of (l * beta_j - r_j), computed exactly."""
    L = len(levels)
    total = Fraction(0)
    for j in range(L):
        on = [p for p in online if owner[p] == j]
        off = [p for p in offline if owner[p] == j]
        e = excess(on, off, ranks_by_class[j])
        if e < 0:
            raise ValueError("negative excess")
        beta = weights[j] * (e - 1) + levels[j] if e >= 1 else 0
        total += L * beta - levels[j]
    return total


def dummy_pages(trace: RequestTrace):
    """k never-requested pages of the lightest class that fill both caches at start."""
    j = min(range(trace.num_classes), key=lambda c: (trace.weights[c], c))
    return j, [f"~dummy{i}" for i in range(trace.k)]


def det_run(trace: RequestTrace, offline_states=None, raise_on_violation=False):
    """Run the algorithm; with a lazy offline schedule, check every stage.

    Both caches start full of never-requested dummy pages, so every load is
    paired with an eviction.  The ledger counts real pages only; dummy
    evictions are reported separately.  Returns (ledger, report).
    """
    pages = [p for _, p in trace.requests]
    key = NextKey(pages)
    dj, dummies = dummy_pages(trace)
    st = LevelState.start(trace)
    for d in dummies:
        st.owner[d] = dj
    st.cache = set(dummies)
    L = trace.num_classes
    universe = [list(u) for u in trace.universe]
    universe[dj] += dummies
    ledger = CostLedger()
    report = {"violations": [], "events": 0, "online_evict": Fraction(0),
              "offline_evict": Fraction(0), "dummy_evict": Fraction(0),
              "drain_violations": [], "potential": []}
    drain = [Fraction(0)] * L
    monitor = offline_states is not None
    offline = set(dummies)
    W = st.weights

    def ranks_at(t):
        return [class_ranks(universe[j], key, t) for j in range(L)]

    def pot(ranks):
        return det_potential(st.levels, W, st.cache, offline, ranks, st.owner)

    for t, (j, p) in enumerate(trace.requests):
        if monitor:
            ranks = ranks_at(t)
            phi0 = pot(ranks)
            real = offline - set(dummies)
            target = set(offline_states[t])
            if p not in target or not (target - real) <= {p}:
                raise ValueError(f"offline schedule not lazy or infeasible at {t}")
            new_off = target | (offline - real)
            while len(new_off) > trace.k:
                d = max(q for q in new_off if q in dummies)
                new_off.discard(d)
            d_off = sum(W[st.owner[q]] for q in offline - new_off)
            offline = new_off
            phi1 = pot(ranks)
            if phi1 - phi0 > L * d_off:
                report["violations"].append((t, "offline"))
            report["offline_evict"] += d_off
            phi_prev = phi1
            if p not in st.cache:
                # substep a: drain levels without evicting yet
                before = list(st.levels)
                nonempty = [False] * L
                for q in st.cache:
                    nonempty[st.owner[q]] = True
                jj = choose_eviction_class(st.levels, nonempty)
                step = st.levels[jj]
                st.levels = [r - step if nonempty[c] else r for c, r in enumerate(before)]
                phi_a = pot(ranks)
                if phi_a - phi1 > 0:
                    report["violations"].append((t, "drain"))
                st.levels = before
                phi_prev = phi_a
        evicted, ecost, lcost, drained = det_serve(st, p, t, key)
        if drained is not None:
            for c in range(L):
                drain[c] += drained[c]
            jj = st.owner[evicted]
            # drained level between two evictions of a class equals its weight
            if drain[jj] != W[jj]:
                report["drain_violations"].append((t, jj))
            drain[jj] = Fraction(0)
            if evicted in dummies:
                report["dummy_evict"] += ecost
            else:
                ledger.evict_cost += ecost
        ledger.load_cost += lcost
        report["online_evict"] += ecost
        if monitor:
            # substeps b and c: evict with level reset, then fetch
            phi_c = pot(ranks)
            if ecost + phi_c - phi_prev > 0:
                report["violations"].append((t, "evict+fetch"))
            ranks = ranks_at(t + 1)
            phi3 = pot(ranks)
            if phi3 - phi_c > 0:
                report["violations"].append((t, "reinsert"))
            report["potential"].append(phi3)
        report["events"] += 1
    if raise_on_violation and report["violations"]:
        raise MonitorViolation(str(report["violations"][:5]))
    return ledger, report
