"""Farthest-in-future paging, the nested Belady ranking and its potential."""

from __future__ import annotations

from bisect import bisect_left

from .core import INF


def next_index(pages):
    """nxt[t] = index of the next request to pages[t] after t (INF if none)."""
    nxt = [INF] * len(pages)
    last = {}
    for t in range(len(pages) - 1, -1, -1):
        nxt[t] = last.get(pages[t], INF)
        last[pages[t]] = t
    return nxt


def first_index(pages):
    first = {}
    for t, p in enumerate(pages):
        first.setdefault(p, t)
    return first


class NextKey:
    """Sort key: (time of next request at or after t, page id)."""

    def __init__(self, pages):
        self._occ = {}
        for t, p in enumerate(pages):
            self._occ.setdefault(p, []).append(t)

    def __call__(self, page, t):
        occ = self._occ.get(page)
        if not occ:
            return (INF, page)
        i = bisect_left(occ, t)
        return (occ[i] if i < len(occ) else INF, page)


def simulate_fif(pages, m, initial=()):
    """Run FiF with ``m`` slots on a page sequence.

    Returns the cache (a frozenset) after every request and the number of
    faults.  Pages never requested again are evicted first, highest id first.
    """
    if m < 1:
        raise ValueError("cache size must be positive")
    key = NextKey(pages)
    cache = set(initial)
    if len(cache) > m:
        raise ValueError("initial cache larger than m")
    schedule, faults = [], 0
    for t, p in enumerate(pages):
        if p not in cache:
            faults += 1
            if len(cache) >= m:
                victim = max(cache, key=lambda q: key(q, t + 1))
                cache.remove(victim)
            cache.add(p)
        schedule.append(frozenset(cache))
    return schedule, faults


def initial_ranking(pages, universe=None):
    """Pages ordered by first request, then never-requested ones by id."""
    first = first_index(pages)
    ordered = sorted(first, key=first.get)
    rest = sorted(set(universe or ()) - set(first))
    return ordered + rest


def update_ranking(ranking, page, key):
    """Move ``page`` to the front via the farthest-in-future chain.

    ``key(q)`` orders pages by their next request after the current one.
    Returns the new ranking (a new list) and the chain of 1-based positions.
    """
    try:
        m0 = ranking.index(page) + 1
    except ValueError:
        raise KeyError(f"page {page!r} not in ranking") from None
    chain = [m0]
    while chain[-1] > 1:
        top = chain[-1] - 1
        best = max(range(top), key=lambda i: key(ranking[i]))
        chain.append(best + 1)
    new = list(ranking)
    new[0] = page
    for a in range(1, len(chain)):
        new[chain[a - 1] - 1] = ranking[chain[a] - 1]
    return new, chain


class BeladyRanking:
    """Belady ranking of one class, advanced request by request."""

    def __init__(self, pages, universe=None):
        self.pages = list(pages)
        self.order = list(universe) if universe is not None else initial_ranking(self.pages)
        missing = set(self.pages) - set(self.order)
        if missing:
            raise ValueError(f"requested pages missing from universe: {sorted(missing)[:3]}")
        self.key = NextKey(self.pages)
        self.t = 0
        self._pos = {p: i for i, p in enumerate(self.order)}

    def position(self, page):
        return self._pos[page] + 1

    def step(self):
        """Serve the next request; returns (position before, chain)."""
        page = self.pages[self.t]
        t = self.t
        new, chain = update_ranking(self.order, page, lambda q: self.key(q, t + 1))
        for i in chain:
            self._pos[new[i - 1]] = i - 1
        self.order = new
        self.t += 1
        return chain[0], chain

    def prefix(self, m):
        return self.order[:m]


def verify_nesting(pages, universe=None, update=update_ranking):
    """Run FiF for every cache size at once and check the nesting.

    Each FiF^m starts from the first m pages of the initial ranking.  Returns
    (True, None) or (False, (t, m, reason)) for the first discrepancy; the
    ranking produced by ``update`` must match the nested differences.
    """
    order = list(universe) if universe is not None else initial_ranking(pages)
    n = len(order)
    key = NextKey(pages)
    caches = [set(order[:m]) for m in range(n + 1)]
    ranking = list(order)
    for t, p in enumerate(pages):
        for m in range(1, n + 1):
            c = caches[m]
            if p not in c:
                victim = max(c, key=lambda q: key(q, t + 1))
                c.remove(victim)
                c.add(p)
        ranking, _ = update(ranking, p, lambda q: key(q, t + 1))
        for m in range(1, n + 1):
            if not caches[m - 1] <= caches[m]:
                return False, (t, m, "containment")
            if set(ranking[:m]) != caches[m]:
                return False, (t, m, "ranking")
    return True, None


def fif_potential(online, offline, rank):
    """max over suffixes s of (#online pages with rank >= s) - (#offline ones).

    ``rank`` maps every page that may appear in either cache to its rank by
    next request (1 = soonest).  The empty suffix is included, so the result
    is at least 0.
    """
    top = max([rank[p] for p in online] + [rank[p] for p in offline] + [0])
    diff = [0] * (top + 2)
    for p in online:
        diff[rank[p]] += 1
    for p in offline:
        diff[rank[p]] -= 1
    best = run = 0
    for s in range(top, 0, -1):
        run += diff[s]
        best = max(best, run)
    return best


def next_request_ranks(pages_in_class, key):
    ordered = sorted(pages_in_class, key=key)
    return {p: i + 1 for i, p in enumerate(ordered)}


def fif_monitor(pages, k, offline_states, universe=None):
    """Check FiF's stepwise potential inequality against an offline schedule.

    Both caches start holding k never-requested phantom pages, so a load into
    a free slot counts as one eviction.  ``offline_states[t]`` is the offline
    cache (set of real pages) after request t and must be lazy.  Returns a
    dict with fault counts and the list of violated (t, phase) pairs.
    """
    uni = set(universe or ()) | set(pages)
    phantoms = [("~phantom", i) for i in range(k)]
    key = NextKey(pages)

    def rank_at(t):
        ks = {p: key(p, t) for p in uni}
        order = sorted(uni, key=lambda p: ks[p][0:1] + (0, str(p)))
        ranks = {p: i + 1 for i, p in enumerate(order)}
        base = len(order)
        for i, ph in enumerate(phantoms):
            ranks[ph] = base + 1 + i
        return ranks

    online = set(phantoms)
    offline = set(phantoms)
    bel = off = 0
    violations = []
    phi_hist = []
    for t, q in enumerate(pages):
        ranks = rank_at(t)
        phi0 = fif_potential(online, offline, ranks)
        # offline move
        target = set(offline_states[t])
        real_before = {p for p in offline if p not in phantoms}
        added = target - real_before
        removed = real_before - target
        if not added <= {q} or q not in target:
            raise ValueError(f"offline schedule not lazy or infeasible at {t}")
        new_off = (offline - removed) | added
        while len(new_off) > k:
            ph = max((p for p in new_off if p in phantoms), default=None)
            if ph is None:
                raise ValueError("offline cache over capacity")
            new_off.discard(ph)
            removed = removed | {ph}
        d_off = len(offline - new_off)
        offline = new_off
        phi1 = fif_potential(online, offline, ranks)
        if phi1 - phi0 > d_off:
            violations.append((t, "offline"))
        # online move
        d_bel = 0
        if q not in online:
            victim = max(online, key=lambda p: ranks[p])
            online.remove(victim)
            online.add(q)
            d_bel = 1
        phi2 = fif_potential(online, offline, ranks)
        if d_bel + phi2 - phi1 > 0:
            violations.append((t, "online"))
        # reinsertion
        ranks = rank_at(t + 1)
        phi3 = fif_potential(online, offline, ranks)
        if phi3 - phi2 > 0:
            violations.append((t, "reinsert"))
        bel += d_bel
        off += d_off
        phi_hist.append(phi3)
    return {"online_faults": bel, "offline_cost": off, "violations": violations,
            "potential": phi_hist}
