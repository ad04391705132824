"""Fractional paging with interleaved class sweeps, rate sets and potentials.

Positions are in page units: x_i is the page mass of class i in the cache
(the first floor(x_i) ranked pages plus a fractional tail), with
sum(x) = k.  A request to ranking position q of class r moves a pointer
across (q-1, q]; while the pointer is beyond x_r the cache mass flows
toward class r.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field

from .alloc import phi_term
from .canonical import RankingTimeline, run_canonical
from .core import RequestTrace

POINTER_SPEED = 8.0
STEP_FRACTION = 0.01
SNAP = 1e-12
NEVER = -math.inf


class WimpError(RuntimeError):
    pass


class IntervalSet:
    """Sorted disjoint intervals (lo, hi] with lo < hi.

    Membership of the moving pointer uses the forward convention
    lo <= p < hi, which is what matters for a point moving rightward.
    """

    def __init__(self, pieces=()):
        self.iv = []
        for lo, hi in sorted(pieces):
            self.add_interval(lo, hi)

    def __iter__(self):
        return iter(tuple(p) for p in self.iv)

    def __len__(self):
        return len(self.iv)

    def __repr__(self):
        return "IntervalSet(%r)" % [tuple(p) for p in self.iv]

    def copy(self):
        out = IntervalSet()
        out.iv = [list(p) for p in self.iv]
        return out

    def measure(self):
        return sum(hi - lo for lo, hi in self.iv)

    def contains(self, p):
        i = bisect.bisect_right(self.iv, [p, math.inf]) - 1
        return i >= 0 and self.iv[i][0] <= p < self.iv[i][1]

    def index_at(self, p):
        i = bisect.bisect_right(self.iv, [p, math.inf]) - 1
        if i >= 0 and self.iv[i][0] <= p < self.iv[i][1]:
            return i
        return None

    def measure_within(self, a, b):
        tot = 0.0
        for lo, hi in self.iv:
            if hi <= a:
                continue
            if lo >= b:
                break
            tot += min(hi, b) - max(lo, a)
        return tot

    def inf(self):
        return self.iv[0][0] if self.iv else math.inf

    def sup(self):
        return self.iv[-1][1] if self.iv else -math.inf

    def add_interval(self, lo, hi):
        """Union with (lo, hi]; merges touching pieces."""
        if hi <= lo:
            return
        iv = self.iv
        i = bisect.bisect_left(iv, [lo, -math.inf])
        if i > 0 and iv[i - 1][1] >= lo:
            i -= 1
        j = i
        a, b = lo, hi
        while j < len(iv) and iv[j][0] <= hi:
            a, b = min(a, iv[j][0]), max(b, iv[j][1])
            j += 1
        iv[i:j] = [[a, b]]

    def remove_left(self, amount, tol=1e-12):
        if tol != math.inf and amount > self.measure() + tol:
            raise WimpError("removal exceeds measure")
        while amount > 0 and self.iv:
            lo, hi = self.iv[0]
            if hi - lo <= amount:
                amount -= hi - lo
                self.iv.pop(0)
            else:
                self.iv[0][0] = lo + amount
                if self.iv[0][1] - self.iv[0][0] <= 1e-14:
                    self.iv.pop(0)
                amount = 0

    def remove_right(self, amount, tol=1e-12):
        if tol != math.inf and amount > self.measure() + tol:
            raise WimpError("removal exceeds measure")
        while amount > 0 and self.iv:
            lo, hi = self.iv[-1]
            if hi - lo <= amount:
                amount -= hi - lo
                self.iv.pop()
            else:
                self.iv[-1][1] = hi - amount
                if self.iv[-1][1] - self.iv[-1][0] <= 1e-14:
                    self.iv.pop()
                amount = 0

    def add_from_range(self, a, b, amount, start=None, force_start=False):
        """Add ``amount`` of new points from (a, b] by pushing one right boundary.

        The pushed boundary belongs to the leftmost interval meeting (a, b];
        if there is none (or ``force_start``), a new empty interval is opened
        at ``start`` (default a).  Gaps are filled left to right, merging
        with intervals met on the way.  Returns the measure actually added.
        """
        if amount <= 0:
            return 0.0
        idx = None
        if not force_start:
            for i, (lo, hi) in enumerate(self.iv):
                if hi >= a and lo < b:
                    idx = i
                    break
        if idx is None:
            s = a if start is None else start
            j = self.index_at(s)
            if j is None:
                pos = bisect.bisect_left(self.iv, [s, s])
                if pos > 0 and self.iv[pos - 1][1] >= s:
                    pos -= 1
                else:
                    self.iv.insert(pos, [s, s])
                idx = pos
            else:
                idx = j
        left = amount
        while left > 0:
            cur = self.iv[idx][1]
            if cur >= b:
                break
            nxt = self.iv[idx + 1][0] if idx + 1 < len(self.iv) else math.inf
            room = min(nxt, b) - cur
            take = min(room, left)
            self.iv[idx][1] = cur + take
            left -= take
            if idx + 1 < len(self.iv) and self.iv[idx][1] >= nxt:
                self.iv[idx][1] = max(self.iv[idx][1], self.iv[idx + 1][1])
                self.iv.pop(idx + 1)
        if self.iv[idx][1] <= self.iv[idx][0]:
            self.iv.pop(idx)
        return amount - left

    def set_measure(self, target):
        """Move the rightmost boundary so the measure equals ``target``."""
        cur = self.measure()
        if target < cur:
            self.remove_right(cur - target, tol=math.inf)
        elif target > cur:
            if self.iv:
                self.iv[-1][1] += target - cur
            else:
                raise WimpError("cannot grow an empty set without an anchor")

    def intersect_from(self, y):
        """Measure of the set within [y, inf)."""
        return self.measure_within(y, math.inf)


class PositionTimeline:
    """Piecewise-constant map from positions to the stamp of their last sweep."""

    def __init__(self):
        self.pieces = []  # sorted disjoint [lo, hi, stamp]

    def copy(self):
        t = PositionTimeline()
        t.pieces = [list(p) for p in self.pieces]
        return t

    def record(self, lo, hi, stamp):
        out = []
        for a, b, s in self.pieces:
            if b <= lo or a >= hi:
                out.append([a, b, s])
                continue
            if a < lo:
                out.append([a, lo, s])
            if b > hi:
                out.append([hi, b, s])
        out.append([lo, hi, stamp])
        out.sort()
        self.pieces = out

    def stamp(self, u):
        """Stamp of the sweep that last covered u (as a point of (lo, hi])."""
        for a, b, s in self.pieces:
            if a < u <= b:
                return s
        return NEVER

    def stamp_right(self, u):
        """Stamp just to the right of u; constant on [lo, hi) pieces."""
        for a, b, s in self.pieces:
            if a <= u < b:
                return s
        return NEVER

    def newer_than(self, lo, hi, s):
        """Measure of {v in (lo, hi] : stamp(v) > s}."""
        if hi <= lo:
            return 0.0
        if s == NEVER:
            return hi - lo  # never-swept u: R is the whole line
        tot = 0.0
        for a, b, st in self.pieces:
            if st > s:
                tot += max(0.0, min(b, hi) - max(a, lo))
        return tot

    def breakpoints(self):
        pts = set()
        for a, b, _ in self.pieces:
            pts.add(a)
            pts.add(b)
        return sorted(pts)


def recent_overlap(timeline: PositionTimeline, u, window):
    """|{v in (y, x] : v was swept more recently than u}|."""
    y, x = window
    if x <= y:
        return 0.0
    return timeline.newer_than(y, x, timeline.stamp(u))


@dataclass
class WimpState:
    weights: tuple
    k: int
    x: list
    rho: list
    S: list
    timelines: list
    pseudo: float = 0.0
    clock: int = 0
    steps: int = 0
    moved: float = 0.0  # weighted movement of x, both directions

    @classmethod
    def start(cls, weights, k, rho0=1.0):
        ell = len(weights)
        x = [k / ell] * ell
        S = [IntervalSet([(xi, xi + rho0)]) for xi in x]
        return cls(tuple(float(w) for w in weights), k, x, [rho0] * ell, S,
                   [PositionTimeline() for _ in range(ell)])

    @property
    def ell(self):
        return len(self.weights)

    @property
    def delta(self):
        return 1.0 / self.ell

    def copy(self):
        return WimpState(self.weights, self.k, list(self.x), list(self.rho),
                         [s.copy() for s in self.S], [t.copy() for t in self.timelines],
                         self.pseudo, self.clock, self.steps, self.moved)

    def normalizers(self):
        C = sum(self.rho)
        return C, self.delta


def flow_shares(state: WimpState, r):
    """Decrease shares d_i over non-frozen classes and the normalizer gamma."""
    ell, w, delta = state.ell, state.weights, state.delta
    active = [i for i in range(ell) if i == r or state.x[i] > 0]
    C = sum(state.rho)
    if C <= 1e-300:
        share = {i: 1.0 / ell + delta for i in active}
    else:
        share = {i: (state.rho[i] + delta * C) / C for i in active}
    gamma = sum(share[i] / w[i] for i in active)
    d = [0.0] * ell
    for i in active:
        d[i] = share[i] / (w[i] * gamma)
    return d, gamma, active


def instantaneous_rates(state: WimpState, r, in_set):
    """(x', rho', gamma) with the rate set indicator given as a fraction."""
    d, gamma, active = flow_shares(state, r)
    dx = [0.0] * state.ell
    drho = [0.0] * state.ell
    for i in active:
        dx[i] = (1.0 if i == r else 0.0) - d[i]
        drho[i] = d[i] - (2.0 * in_set if i == r else 0.0)
    return dx, drho, gamma


def _cap(state, r, dx, drho, h):
    C = sum(state.rho)
    floor = max(state.delta * C, 1e-9)
    for i in range(state.ell):
        if dx[i]:
            h = min(h, STEP_FRACTION * max(abs(state.x[i]), floor) / abs(dx[i]))
            if dx[i] < 0:
                h = min(h, state.x[i] / -dx[i])
        if drho[i]:
            h = min(h, STEP_FRACTION * max(abs(state.rho[i]), floor) / abs(drho[i]))
            if drho[i] < 0:
                h = min(h, state.rho[i] / -drho[i])
    return h


def _apply(state, r, dx, drho, gamma, h, add_amount, add_range, add_start, force_start):
    old_x = list(state.x)
    new_x = [xi + h * v for xi, v in zip(old_x, dx)]
    for i in range(state.ell):
        if i != r and dx[i] < 0 and new_x[i] < 1e-13:
            new_x[i] = 0.0
    new_rho = [max(0.0, p + h * v) for p, v in zip(state.rho, drho)]
    for i in range(state.ell):
        if i != r and new_x[i] < old_x[i]:
            state.S[i].add_interval(new_x[i], old_x[i])
    Sr = state.S[r]
    if add_amount > 0:
        Sr.add_from_range(add_range[0], add_range[1], add_amount, start=add_start,
                          force_start=force_start)
    if dx[r] > 0:
        Sr.remove_left(dx[r] * h, tol=math.inf)
    Sr.remove_right(h, tol=math.inf)
    state.moved += sum(w * abs(a - b) for w, a, b in zip(state.weights, new_x, old_x))
    state.x = new_x
    state.rho = new_rho
    _repair(state, r)
    state.pseudo += h / gamma
    state.steps += 1


def _repair(state, r):
    err = state.k - sum(state.x)
    if abs(err) > 1e-9 * max(1, state.k):
        raise WimpError(f"simplex drift {err:.3g}")
    if err:
        j = max(range(state.ell), key=lambda i: state.x[i])
        state.x[j] += err
    for i in range(state.ell):
        S = state.S[i]
        if state.rho[i] <= 1e-15:
            state.rho[i] = 0.0
            S.iv = []
            continue
        S.iv = [iv for iv in S.iv if iv[1] > iv[0]]
        if not S.iv:
            S.iv = [[state.x[i], state.x[i] + state.rho[i]]]
        else:
            S.set_measure(state.rho[i])
        # drop any sliver left of x_i produced by rounding
        if S.iv and S.iv[0][0] < state.x[i]:
            cut = min(state.x[i], S.iv[0][1]) - S.iv[0][0]
            if cut > 1e-9:
                raise WimpError(f"rate set of class {i} reaches below x")
            S.iv[0][0] = min(state.x[i], S.iv[0][1])
            S.set_measure(state.rho[i])


def _sweep(state: WimpState, r, q, max_steps):
    """Move the pointer across (q-1, q] and run the dynamics while p > x_r."""
    p = max(q - 1.0, min(q, state.x[r]))
    n = 0
    while q - p > SNAP:
        Sr = state.S[r]
        idx = Sr.index_at(p)
        in_set = idx is not None
        dx, drho, gamma = instantaneous_rates(state, r, 1.0 if in_set else 0.0)
        h = (q - p) / POINTER_SPEED
        snap_to = None
        if in_set:
            hi = Sr.iv[idx][1]
            last = idx == len(Sr.iv) - 1
            t_star = (hi - p) / (POINTER_SPEED + (1.0 if last else 0.0))
            if not last:
                h = min(h, sum(b - a for a, b in Sr.iv[idx + 1:]))
        else:
            j = bisect.bisect_right(Sr.iv, [p, math.inf])
            t_star = (Sr.iv[j][0] - p) / POINTER_SPEED if j < len(Sr.iv) else math.inf
        if t_star * POINTER_SPEED < SNAP:
            p = Sr.iv[idx][1] if in_set else Sr.iv[j][0]
            continue
        if t_star <= h:
            h = t_star
            snap_to = "hi" if in_set else "lo"
        h = _cap(state, r, dx, drho, h)
        if h <= 0:
            raise WimpError("zero step in sweep")
        start = state.x[r] if q - 1 < state.x[r] <= q else q - 1.0
        add = 0.0 if in_set else 2.0 * h
        _apply(state, r, dx, drho, gamma, h, add, (q - 1.0, p + POINTER_SPEED * h), start, False)
        newp = p + POINTER_SPEED * h
        if snap_to is not None and state.S[r].iv:
            pts = [b for _, b in state.S[r].iv] if snap_to == "hi" else [a for a, _ in state.S[r].iv]
            best = min(pts, key=lambda v: abs(v - newp))
            if abs(best - newp) < 1e-9:
                newp = best
        p = min(newp, q)
        n += 1
        if n > max_steps:
            raise WimpError("sweep exceeded its step budget")
    return n


def _top_up(state: WimpState, r, max_steps):
    """Limit of repeated sweeps of the top cell until x_r reaches 1.

    Over many fast sweeps of (x_r, 1] the pointer spends a fraction theta
    of its time inside S_r, so rho_r drains at 2*theta and new points enter
    S_r at 2*(1 - theta).
    """
    n = 0
    while state.x[r] < 1.0:
        Sr = state.S[r]
        gap = 1.0 - state.x[r]
        theta = min(1.0, Sr.measure_within(state.x[r], 1.0) / gap)
        dx, drho, gamma = instantaneous_rates(state, r, theta)
        if dx[r] <= 0:
            raise WimpError("requested class cannot grow")
        h = _cap(state, r, dx, drho, gap / dx[r])
        last = h >= gap / dx[r]
        attached = bool(Sr.iv) and Sr.iv[0][0] <= state.x[r] + SNAP
        add = 2.0 * (1.0 - theta) * h
        _apply(state, r, dx, drho, gamma, h, add, (0.0, 1.0), state.x[r], not attached)
        if last or state.x[r] > 1.0 - 1e-13:
            err = 1.0 - state.x[r]
            state.x[r] = 1.0
            j = max((i for i in range(state.ell) if i != r), key=lambda i: state.x[i])
            state.x[j] -= err
            _repair(state, r)
            break
        n += 1
        if n > max_steps:
            raise WimpError("top-up exceeded its step budget")
    return n


def wimp_serve(state: WimpState, r, q, max_steps=10 ** 6):
    """Serve a request to ranking position q (1-based) of class r, in place."""
    if q < 1:
        raise WimpError("positions start at 1")
    state.clock += 1
    n = _sweep(state, r, q, max_steps)
    state.timelines[r].record(q - 1.0, float(q), state.clock)
    if state.x[r] < 1.0:
        n += _top_up(state, r, max_steps)
        state.clock += 1
        state.timelines[r].record(0.0, 1.0, state.clock)
    if state.x[r] < 1.0 - 1e-9:
        raise WimpError("requested page not fully loaded")
    return n


# potentials


def lambda_term(state: WimpState, i, y):
    """Exact integral over S_i of N(u) / (rho + delta*(rho + N(u))).

    N(u) = |(y, x] cap R_u| is constant on pieces of S_i with a constant
    sweep stamp, so the integral is a finite sum.
    """
    x, rho, delta = state.x[i], state.rho[i], state.delta
    if x <= y or rho <= 0:
        return 0.0
    tl = state.timelines[i]
    cuts = tl.breakpoints()
    tot = 0.0
    for lo, hi in state.S[i]:
        pts = [lo] + [c for c in cuts if lo < c < hi] + [hi]
        for a, b in zip(pts, pts[1:]):
            if b <= a:
                continue
            mid = 0.5 * (a + b)
            s = tl.stamp(mid)
            N = tl.newer_than(y, x, s)
            tot += (b - a) * N / (rho + delta * (rho + N))
    return tot


@dataclass
class PotentialReport:
    phi: float
    lam: float
    psi: float
    scatter: float
    theta: float

    def as_dict(self):
        return {"phi": self.phi, "lambda": self.lam, "psi": self.psi,
                "scatter": self.scatter, "theta": self.theta}


def wimp_potentials(state: WimpState, y):
    delta = state.delta
    phi = lam = psi = sc = 0.0
    for i, w in enumerate(state.weights):
        x, rho = state.x[i], state.rho[i]
        phi += w * phi_term(rho, x, y[i], delta)
        lam += w * lambda_term(state, i, y[i])
        psi += w * max(0.0, rho + 2 * (x - y[i]))
        sc += w * (state.S[i].intersect_from(y[i]) + max(0.0, x - y[i]))
    return PotentialReport(phi, lam, psi, sc, 10 * phi + 5 * lam + 2 * psi + 4 * sc)


# runs


def offline_profile_from_counts(trace: RequestTrace, counts):
    """Page-unit offline point per request, topped up to exactly k.

    Spare slots go to the lightest classes (up to their universe sizes).
    """
    order = sorted(range(trace.num_classes), key=lambda j: (trace.weights[j], j))
    out = []
    for row in counts:
        y = [float(c) for c in row]
        spare = trace.k - sum(y)
        for j in order:
            if spare <= 0:
                break
            room = len(trace.universe[j]) - y[j]
            take = min(room, spare)
            y[j] += take
            spare -= take
        out.append(y)
    return out


def check_invariants(state: WimpState, tol=1e-9):
    problems = []
    if abs(sum(state.x) - state.k) > tol * max(1, state.k):
        problems.append("sum of x differs from k")
    for i in range(state.ell):
        if state.rho[i] < 0:
            problems.append(f"negative rate in class {i}")
        if abs(state.S[i].measure() - state.rho[i]) > tol * max(1.0, state.rho[i]):
            problems.append(f"|S| != rho in class {i}")
        if state.S[i].iv and state.S[i].inf() < state.x[i] - tol:
            problems.append(f"S below x in class {i}")
        if state.x[i] < -tol:
            problems.append(f"negative x in class {i}")
    return problems


@dataclass
class WimpRun:
    profile: list
    positions: list
    pseudo: float
    ledger: object
    initial: list
    records: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    invariant_failures: list = field(default_factory=list)

    @property
    def true_cost(self):
        return self.ledger.load_cost - self.ledger.initial_fill


def wimp_run(trace: RequestTrace, offline=None, c_mon=100.0, eps=1e-6, jsonl=None,
             check=True):
    """Serve a trace; with an offline page-unit trajectory, monitor every event.

    The trace is padded so each class has at least k pages.  ``offline`` is
    a list of per-request class masses (page units, summing to k), for
    instance from ``offline_profile_from_counts``.  The monitor checks
    d(pseudo) + d(Theta) <= c_mon * log(l+1) * d(Off) + eps per request.
    """
    tr = trace.padded(trace.k)
    state = WimpState.start(tr.weights.weights, tr.k)
    tl = RankingTimeline(tr)
    initial = list(state.x)
    L = tr.num_classes
    bound = c_mon * math.log(L + 1)
    profile, positions, records, violations, fails = [], [], [], [], []
    y = list(initial)
    for t, (r, page) in enumerate(tr.requests):
        q = tl.position(page)
        positions.append(q)
        rec = {"t": t, "class": r + 1, "position": q}
        if offline is not None:
            th0 = wimp_potentials(state, y)
            y_new = offline[t]
            move = sum(w * abs(a - b) for w, a, b in zip(tr.weights, y_new, y))
            service = tr.weights[r] * min(1.0, max(0.0, q - y_new[r]))
            th1 = wimp_potentials(state, y_new)
            y = list(y_new)
            pseudo0 = state.pseudo
        wimp_serve(state, r, q)
        tl.step()
        profile.append(list(state.x))
        if check:
            bad = check_invariants(state)
            if bad:
                fails.append((t, bad))
        if offline is not None:
            th2 = wimp_potentials(state, y)
            d_pseudo = state.pseudo - pseudo0
            lhs = d_pseudo + th2.theta - th0.theta
            rhs = bound * (move + service) + eps
            ok = lhs <= rhs
            rec.update({"potentials": th2.as_dict(), "d_pseudo": d_pseudo,
                        "d_theta": th2.theta - th0.theta,
                        "d_theta_offline": th1.theta - th0.theta,
                        "off_move": move, "off_service": service,
                        "lhs": lhs, "rhs": rhs, "pass": ok})
            if not ok:
                violations.append((t, lhs - rhs))
        rec["x"] = list(state.x)
        rec["pseudo"] = state.pseudo
        records.append(rec)
    ledger = run_canonical(tr, profile, initial=initial, units="pages")
    if jsonl is not None:
        with open(jsonl, "w") as fh:
            for rec in records:
                fh.write(json.dumps(rec) + "\n")
    return WimpRun(profile, positions, state.pseudo, ledger, initial, records,
                   violations, fails)


def pseudo_cost_check(run: WimpRun, weights, k, factor=18.0):
    """True online cost (net of the initial fill) vs factor * pseudo-cost + sum(w)*k."""
    slack = sum(weights) * k
    return run.true_cost <= factor * run.pseudo + slack
