"""Traces, weight classes, the within-class future oracle and cost ledgers."""

from __future__ import annotations

import math
import re
from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

INF = math.inf

# Requests are (class, page) with 0-based classes; the text format is 1-based.
_HEADER = re.compile(r"^k=(\d+);\s*w=(.*)$")
_UNIVERSE = "#! universe "


class TraceError(ValueError):
    pass


class InfeasibleSchedule(ValueError):
    pass


def _parse_weight(tok: str) -> Fraction:
    tok = tok.strip()
    try:
        return Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise TraceError(f"malformed weight {tok!r}") from None


@dataclass(frozen=True)
class WeightTable:
    weights: tuple

    def __post_init__(self):
        if len(self.weights) < 1:
            raise TraceError("need at least one weight class")
        for w in self.weights:
            if not w > 0:
                raise TraceError(f"nonpositive weight {w}")
        if len(set(self.weights)) != len(self.weights):
            raise TraceError("duplicate weight value")

    def __len__(self):
        return len(self.weights)

    def __getitem__(self, j):
        return self.weights[j]

    @property
    def total(self):
        return sum(self.weights)


@dataclass
class RequestTrace:
    """A weighted paging instance.

    ``universe[j]`` lists the pages of class ``j``; its order is the initial
    Belady ranking of that class.
    """

    weights: WeightTable
    k: int
    requests: list
    universe: list
    weight_text: tuple = None
    comments: list = field(default_factory=list)
    declared_universe: bool = False
    trailing_newline: bool = True

    def __post_init__(self):
        if self.k < 1:
            raise TraceError("cache size must be positive")
        owner = {}
        for j, pages in enumerate(self.universe):
            for p in pages:
                if p in owner and owner[p] != j:
                    raise TraceError(f"page {p!r} in two classes")
                owner[p] = j
        for j, p in self.requests:
            if not 0 <= j < len(self.weights):
                raise TraceError(f"unknown class {j + 1}")
            if owner.get(p) != j:
                raise TraceError(f"page {p!r} not in class {j + 1}")
        self.owner = owner

    @property
    def num_classes(self):
        return len(self.weights)

    def __len__(self):
        return len(self.requests)

    def class_requests(self, j):
        return [p for c, p in self.requests if c == j]

    def weight_of(self, page):
        return self.weights[self.owner[page]]

    def padded(self, min_pages: int) -> "RequestTrace":
        """Copy with never-requested sentinel pages so each class has >= min_pages."""
        uni = []
        for j, pages in enumerate(self.universe):
            pages = list(pages)
            i = 0
            while len(pages) < min_pages:
                name = f"~{j + 1}.{i}"
                i += 1
                if name not in self.owner:
                    pages.append(name)
            uni.append(pages)
        return RequestTrace(self.weights, self.k, list(self.requests), uni,
                            self.weight_text, list(self.comments), True)


def make_trace(weights: Sequence, k: int, requests: Iterable, universe=None) -> RequestTrace:
    """Build a trace from python values; the universe defaults to first-request order."""
    wt = WeightTable(tuple(Fraction(w) if not isinstance(w, float) else w for w in weights))
    requests = [(int(j), p) for j, p in requests]
    declared = universe is not None
    if universe is None:
        universe = [[] for _ in wt.weights]
        seen = set()
        for j, p in requests:
            if p not in seen:
                seen.add(p)
                if 0 <= j < len(universe):
                    universe[j].append(p)
    return RequestTrace(wt, k, requests, [list(u) for u in universe], declared_universe=declared)


def load_trace(text: str) -> RequestTrace:
    lines = text.split("\n")
    trailing = text.endswith("\n")
    if trailing:
        lines = lines[:-1]
    comments = []
    header = None
    requests = []
    declared = {}
    for lineno, raw in enumerate(lines, 1):
        s = raw.strip()
        if not s or s.startswith("#"):
            comments.append((len(requests) if header else -1, raw))
            if s.startswith(_UNIVERSE.strip()) and header is not None:
                parts = s[len(_UNIVERSE):].split()
                if not parts:
                    raise TraceError(f"line {lineno}: malformed universe line")
                try:
                    j = int(parts[0]) - 1
                except ValueError:
                    raise TraceError(f"line {lineno}: malformed universe line") from None
                declared[j] = parts[1:]
            continue
        if header is None:
            m = _HEADER.match(s)
            if not m:
                raise TraceError(f"line {lineno}: malformed header")
            wtoks = tuple(t.strip() for t in m.group(2).split(","))
            header = (int(m.group(1)), wtoks)
            continue
        parts = s.split()
        if len(parts) != 2:
            raise TraceError(f"line {lineno}: malformed line")
        try:
            j = int(parts[0])
        except ValueError:
            raise TraceError(f"line {lineno}: malformed line") from None
        if not 1 <= j <= len(header[1]):
            raise TraceError(f"line {lineno}: unknown class {j}")
        requests.append((j - 1, parts[1]))
    if header is None:
        raise TraceError("missing header")
    k, wtoks = header
    wt = WeightTable(tuple(_parse_weight(t) for t in wtoks))
    universe = [[] for _ in wtoks]
    seen = set()
    for j, pages in declared.items():
        if not 0 <= j < len(universe):
            raise TraceError(f"unknown class {j + 1}")
        universe[j] = list(pages)
        seen.update(pages)
    for j, p in requests:
        if p not in seen:
            seen.add(p)
            universe[j].append(p)
    return RequestTrace(wt, k, requests, universe, wtoks, comments, bool(declared), trailing)


def dump_trace(trace: RequestTrace) -> str:
    wtoks = trace.weight_text or tuple(_fmt_num(w) for w in trace.weights.weights)
    out = [raw for pos, raw in trace.comments if pos == -1]
    out.append(f"k={trace.k}; w={','.join(wtoks)}")
    after = {}
    for pos, raw in trace.comments:
        if pos >= 0:
            after.setdefault(pos, []).append(raw)
    if trace.declared_universe and not any(raw.strip().startswith(_UNIVERSE.strip())
                                           for _, raw in trace.comments):
        for j, pages in enumerate(trace.universe):
            after.setdefault(0, []).insert(j, _UNIVERSE + " ".join([str(j + 1)] + list(pages)))
    for i, (j, p) in enumerate(trace.requests):
        out.extend(after.get(i, []))
        out.append(f"{j + 1} {p}")
    out.extend(after.get(len(trace.requests), []))
    text = "\n".join(out)
    return text + "\n" if trace.trailing_newline else text


def _fmt_num(w) -> str:
    if isinstance(w, Fraction):
        if w.denominator == 1:
            return str(w.numerator)
        return repr(float(w))
    if float(w).is_integer():
        return str(int(w))
    return repr(float(w))


def round_weights(raw_weights: Sequence, base=2):
    """Round each weight up to a power of ``base``.

    Returns the table of distinct rounded weights (ascending) and, for each
    input weight, the index of its class.
    """
    if not base > 1:
        raise ValueError("base must exceed 1")
    rounded = []
    for w in raw_weights:
        if not w >= 1:
            raise ValueError(f"weight {w} below 1")
        e = max(0, math.ceil(math.log(w) / math.log(base)))
        while base ** e < w:
            e += 1
        while e > 0 and base ** (e - 1) >= w:
            e -= 1
        rounded.append(base ** e)
    table = sorted(set(rounded))
    index = {v: i for i, v in enumerate(table)}
    return WeightTable(tuple(table)), [index[v] for v in rounded]


class MyopicOracle:
    """Next-occurrence information for a trace, exposed only within a class.

    Time ``t`` refers to the request with 0-based index ``t``; ``next_time``
    returns the first index >= t at which the page is requested.
    """

    def __init__(self, trace: RequestTrace):
        self._owner = trace.owner
        self._times = {}
        for t, (_, p) in enumerate(trace.requests):
            self._times.setdefault(p, []).append(t)

    def next_time(self, page, t):
        ts = self._times.get(page)
        if not ts:
            return INF
        i = bisect_left(ts, t)
        return ts[i] if i < len(ts) else INF

    def key(self, page, t):
        return (self.next_time(page, t), page)

    def compare(self, p, q, t):
        """-1 if p is requested before q (from time t on), +1 otherwise."""
        if self._owner.get(p) != self._owner.get(q):
            raise ValueError("pages of different classes are not comparable")
        if p == q:
            return 0
        return -1 if self.key(p, t) < self.key(q, t) else 1


@dataclass
class CostLedger:
    load_cost: float = 0
    evict_cost: float = 0
    service_cost: float = 0
    movement_cost: float = 0
    initial_fill: float = 0

    def add(self, **kw):
        for name, v in kw.items():
            if v < 0:
                raise ValueError(f"negative increment for {name}")
            setattr(self, name, getattr(self, name) + v)

    @property
    def net_load(self):
        return self.load_cost - self.initial_fill

    def as_dict(self):
        return {k: float(getattr(self, k)) for k in
                ("load_cost", "evict_cost", "service_cost", "movement_cost", "initial_fill")}


def validate_schedule(trace: RequestTrace, cache_states: Sequence, tol=1e-9, initial=None) -> CostLedger:
    """Check a schedule and price it.

    ``cache_states[t]`` is the cache after serving request ``t``: either a set of
    pages or a mapping page -> mass in [0, 1].  The cache starts as ``initial``
    (empty by default).
    """
    if len(cache_states) != len(trace.requests):
        raise ValueError("need one cache state per request")
    ledger = CostLedger()
    prev = _as_mass(initial or {})
    exact = all(isinstance(v, (int, Fraction)) for v in prev.values())
    for t, state in enumerate(cache_states):
        cur = _as_mass(state)
        total = 0
        for p, m in cur.items():
            if p not in trace.owner:
                raise InfeasibleSchedule(f"unknown page {p!r} at time {t}")
            if m < -tol or m > 1 + tol:
                raise InfeasibleSchedule(f"mass {m} out of range at time {t}")
            total += m
        if total > trace.k + (0 if exact else tol):
            raise InfeasibleSchedule(f"capacity exceeded at time {t}")
        page = trace.requests[t][1]
        if cur.get(page, 0) < 1 - (0 if exact else tol):
            raise InfeasibleSchedule(f"infeasible: requested page {page!r} absent at time {t}")
        for p in set(cur) | set(prev):
            d = cur.get(p, 0) - prev.get(p, 0)
            w = trace.weight_of(p)
            if d > 0:
                ledger.load_cost += w * d
            elif d < 0:
                ledger.evict_cost += -w * d
        prev = cur
    return ledger


def _as_mass(state):
    if isinstance(state, dict):
        return {p: m for p, m in state.items() if m != 0}
    return {p: 1 for p in state}
