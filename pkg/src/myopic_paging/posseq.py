"""Position sequences of a single class and the repeat property."""

from __future__ import annotations

from collections import Counter

from .belady import BeladyRanking
from .core import INF


class RepeatPropertyError(ValueError):
    pass


def to_position_sequence(pages, universe=None):
    """Ranking position of each request just before it is served."""
    rk = BeladyRanking(pages, universe)
    return [rk.step()[0] for _ in range(len(pages))]


def check_repeat_property(h):
    """Return (True, None) or (False, (t1, t2, missing)) with 1-based times.

    Only consecutive occurrences of a value need checking: a missing value
    between far occurrences is missing between some consecutive pair too.
    """
    last = {}
    for t2, v in enumerate(h):
        t1 = last.get(v)
        if t1 is not None and v > 2:
            between = set(h[t1 + 1:t2])
            for m in range(2, v):
                if m not in between:
                    return False, (t1 + 1, t2 + 1, m)
        last[v] = t2
    return True, None


def realize_position_sequence(h, prefix="p"):
    """Build a page sequence whose position sequence is ``h``.

    Returns (pages, universe) where ``universe`` is the initial ranking the
    construction assumes.  Pages are named ``{prefix}1..{prefix}n``.
    """
    h = list(h)
    ok, bad = check_repeat_property(h)
    if not ok:
        raise RepeatPropertyError(f"repeat property violated at {bad}")
    if any(v < 1 for v in h):
        raise RepeatPropertyError("positions must be positive")
    n = max(h, default=0)
    ranking = [f"{prefix}{i + 1}" for i in range(n)]
    universe = list(ranking)
    pages = []
    for v in h:
        page = ranking[v - 1]
        pages.append(page)
        ranking[0], ranking[v - 1] = ranking[v - 1], ranking[0]
    return pages, universe


def occurrences(h, lo, hi):
    return Counter(h[lo:hi])


def check_amortized_convexity(h, interval, m):
    """count of m in h[interval] >= count of m+1 there, minus one."""
    if m < 2:
        raise ValueError("m must be at least 2")
    lo, hi = interval
    c = Counter(h[lo:hi])
    return c[m] >= c[m + 1] - 1


def all_intervals_convex(h):
    """Check every interval and every m >= 2 in O(T^2 + T*n)."""
    T = len(h)
    for lo in range(T):
        c = Counter()
        for hi in range(lo, T):
            c[h[hi]] += 1
            v = h[hi]
            # only counts of v changed; check the pairs (v-1, v) and (v, v+1)
            if v - 1 >= 2 and c[v - 1] < c[v] - 1:
                return False, (lo, hi + 1, v - 1)
    return True, None


def parse_positions(text):
    return [int(tok) for tok in text.split()]


def format_positions(h):
    return " ".join(str(v) for v in h)


def next_request_times(pages):
    out = []
    last = {}
    for t in range(len(pages) - 1, -1, -1):
        out.append(last.get(pages[t], INF))
        last[pages[t]] = t
    return out[::-1]
