"""Convex allocation on the simplex with separate rate variables.

The state is a point x on the simplex plus a region estimate c >= x; the
rate variable of direction i is rho_i = c_i - x_i.  A charge of alpha in
direction r raises x_r and lowers every coordinate in proportion to
(rho_i + delta*C) / (w_i * C).
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field

SIMPLEX_TOL = 1e-12
STEP_FRACTION = 0.01


class AllocError(ValueError):
    pass


@dataclass(frozen=True)
class ChargeEvent:
    direction: int  # 0-based
    alpha: float
    dt: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise AllocError("charge rate must be finite and positive")
        if not (math.isfinite(self.dt) and self.dt >= 0):
            raise AllocError("duration must be finite and nonnegative")


@dataclass(frozen=True)
class StrictEvent:
    direction: int
    threshold: float


@dataclass
class AllocState:
    weights: tuple
    x: list
    c: list
    movement: float = 0.0
    service: float = 0.0
    beta_total: float = 0.0
    steps: int = 0

    @classmethod
    def start(cls, weights, rho0=None):
        ell = len(weights)
        x = [1.0 / ell] * ell
        r0 = 1.0 / ell if rho0 is None else rho0
        return cls(tuple(float(w) for w in weights), x, [xi + r0 for xi in x])

    @property
    def ell(self):
        return len(self.weights)

    @property
    def delta(self):
        return 1.0 / self.ell

    @property
    def rho(self):
        return [ci - xi for ci, xi in zip(self.c, self.x)]

    def copy(self):
        return AllocState(self.weights, list(self.x), list(self.c), self.movement,
                          self.service, self.beta_total, self.steps)


def decrease_weights(state: AllocState, r: int):
    """Shares d_i (summing to 1) of the decrease, and the normalizer gamma.

    Coordinates sitting at 0 (other than r) are frozen and left out of the
    normalization.  When C = 0 the rate shares are taken uniform, which is
    the continuous limit of (rho_i + delta*C)/C.
    """
    ell, w, delta = state.ell, state.weights, state.delta
    rho = state.rho
    active = [i for i in range(ell) if i == r or state.x[i] > 0]
    C = sum(max(0.0, p) for p in rho)
    if C <= 1e-300:
        share = {i: 1.0 / ell + delta for i in active}
    else:
        share = {i: (max(0.0, rho[i]) + delta * C) / C for i in active}
    gamma = sum(share[i] / w[i] for i in active)
    d = [0.0] * ell
    for i in active:
        d[i] = share[i] / (w[i] * gamma)
    return d, gamma


def rates(state: AllocState, r: int, alpha: float):
    """Instantaneous (x', c_r', d, gamma) for a charge alpha in direction r."""
    w = state.weights
    d, gamma = decrease_weights(state, r)
    base = alpha / w[r]
    dx = [base * ((1.0 if i == r else 0.0) - d[i]) for i in range(state.ell)]
    rho_r = state.c[r] - state.x[r]
    if alpha > rho_r:
        dc = base
    elif alpha < rho_r:
        dc = -base
    else:
        dc = dx[r]  # both rules apply: c_r slides with x_r
    return dx, dc, d, gamma


def _substep_length(state, dx, dc, r, alpha, remaining):
    rho = state.rho
    C = sum(rho)
    floor = max(state.delta * C, 1e-9)
    h = remaining
    for i, v in enumerate(dx):
        if v == 0.0:
            continue
        h = min(h, STEP_FRACTION * max(abs(state.x[i]), floor) / abs(v))
        if v < 0 and i != r:
            h = min(h, state.x[i] / -v)  # land exactly on 0, then freeze
    drho = [-v for v in dx]
    drho[r] = dc - dx[r]
    for i, v in enumerate(drho):
        if v != 0.0:
            h = min(h, STEP_FRACTION * max(abs(rho[i]), floor) / abs(v))
    return max(h, 0.0)


def _repair(state: AllocState, r: int):
    for i in range(state.ell):
        if state.x[i] < 0:
            state.x[i] = 0.0
    s = sum(state.x)
    if abs(s - 1.0) > 1e-9:
        raise AllocError(f"simplex drift {s - 1.0:.3g} before repair")
    for _ in range(3):
        err = 1.0 - sum(state.x)
        if abs(err) <= SIMPLEX_TOL:
            break
        j = max(range(state.ell), key=lambda i: state.x[i])
        state.x[j] += err
    for i in range(state.ell):
        if state.c[i] < state.x[i]:
            state.c[i] = state.x[i]


def integrate(state: AllocState, r: int, alpha_fn, duration, service=True,
              observer=None, max_steps=10 ** 7, stop=None):
    """Advance under charges in direction r for ``duration`` time.

    ``alpha_fn(state)`` gives the current charge.  ``observer(before, after,
    h, alpha, beta_h)`` sees every substep.  Returns the number of substeps.
    """
    remaining = duration
    n = 0
    while remaining > 1e-15:
        alpha = alpha_fn(state)
        if alpha <= 0 or (stop is not None and stop(state)):
            break
        dx, dc, d, gamma = rates(state, r, alpha)
        h = _substep_length(state, dx, dc, r, alpha, remaining)
        if h <= 0:
            break
        before = state.copy() if observer else None
        rho_r = state.c[r] - state.x[r]
        new_x = [xi + h * v for xi, v in zip(state.x, dx)]
        new_cr = state.c[r] + h * dc
        new_rho_r = new_cr - new_x[r]
        # crossing alpha from either side: rho_r stays at alpha (sliding)
        if (rho_r - alpha) * (new_rho_r - alpha) < 0:
            new_cr = new_x[r] + alpha
        for i in range(state.ell):
            if i != r and dx[i] < 0 and new_x[i] < 1e-15:
                new_x[i] = 0.0
        state.movement += sum(wi * abs(a - b) for wi, a, b in zip(state.weights, new_x, state.x))
        state.x = new_x
        state.c[r] = new_cr
        _repair(state, r)
        beta_h = alpha / (gamma * state.weights[r]) * h
        state.beta_total += beta_h
        if service:
            state.service += alpha * h
        state.steps += 1
        n += 1
        if observer:
            observer(before, state, h, alpha, beta_h, r)
        remaining -= h
        if n > max_steps:
            raise AllocError("integration did not finish within the step budget")
    return n


def alloc_step(state: AllocState, event: ChargeEvent, observer=None):
    """Apply a constant-rate charge for its duration, in place."""
    if not 0 <= event.direction < state.ell:
        raise AllocError("direction out of range")
    integrate(state, event.direction, lambda s: event.alpha, event.dt, observer=observer)
    return state


def serve_strict(state: AllocState, r: int, threshold: float, observer=None,
                 tol=1e-9, max_steps=10 ** 6):
    """Move until x_r >= threshold by charging (threshold - x_r) continuously."""
    if not 0 <= threshold < 1:
        raise AllocError("threshold must lie in [0, 1)")
    if state.x[r] >= threshold - tol:
        return state
    integrate(state, r, lambda s: threshold - s.x[r], math.inf, service=False,
              observer=observer, max_steps=max_steps,
              stop=lambda s: s.x[r] >= threshold - tol)
    return state


def simplify_cost(f, x_r, slope=None, eps=1e-7):
    """Linearize a convex nonincreasing cost at x_r.

    Returns (alpha, s): alpha = f(x_r) and s the magnitude of the tangent
    slope, or None when f(x_r) = 0.  Charging alpha/s for s times as long
    gives the same online cost and a slope -1 function.
    """
    a = f(x_r)
    if math.isinf(a):
        raise AllocError("infinite cost at the current point; serve as a strict event")
    if a <= 0:
        return None
    if slope is None:
        slope = (f(x_r) - f(x_r + eps)) / eps
    s = abs(slope)
    if s <= 0:
        raise AllocError("cost is flat at the current point")
    return a, s


def charge_from_cost(direction, f, x_r, dt, slope=None):
    out = simplify_cost(f, x_r, slope)
    if out is None:
        return None
    a, s = out
    return ChargeEvent(direction, a / s, dt * s)


# potentials


def phi_term(rho, x, y, delta):
    if x < y:
        return 0.0
    s = rho + x - y
    if s <= 0:
        return 0.0
    return s * math.log((1 + delta) * s / (rho + delta * s))


def dphi_dx(rho, x, y, delta):
    s = rho + x - y
    q = rho + delta * s
    return math.log((1 + delta) * s / q) + 1 - delta * s / q


def dphi_drho(rho, x, y, delta):
    s = rho + x - y
    q = rho + delta * s
    return math.log((1 + delta) * s / q) + 1 - (1 + delta) * s / q


@dataclass
class Potentials:
    phi: float
    psi: float
    theta: float
    overlap: float  # L = sum (x_i - y_i)_+
    c_tilde: float


def alloc_potentials(state: AllocState, y, phi_coef=30.0, psi_coef=12.0):
    delta = state.delta
    rho = state.rho
    phi = psi = L = ct = 0.0
    for i, w in enumerate(state.weights):
        xi, yi, ri = state.x[i], y[i], max(0.0, rho[i])
        phi += w * phi_term(ri, xi, yi, delta)
        psi += w * max(0.0, ri + 2 * (xi - yi))
        L += max(0.0, xi - yi)
        ct += max(0.0, ri + xi - yi)
    return Potentials(phi, psi, phi_coef * phi + psi_coef * psi, L, ct)


@dataclass
class AllocMonitor:
    """Per-substep check of 6*beta' + Theta' <= c_mon * S*' + eps."""

    y: list
    c_mon: float
    eps: float = 1e-6
    offline_service: float = 0.0
    offline_movement: float = 0.0
    checks: int = 0
    violations: list = field(default_factory=list)
    worst: float = -math.inf

    def __call__(self, before, after, h, alpha, beta_h, r):
        # the charge has slope -1 with intercept x_r + alpha
        s0 = max(0.0, before.x[r] + alpha - self.y[r])
        s1 = max(0.0, after.x[r] + alpha - self.y[r])
        ds = 0.5 * (s0 + s1) * h
        self.offline_service += ds
        lhs = 6 * beta_h + alloc_potentials(after, self.y).theta \
            - alloc_potentials(before, self.y).theta
        slack = lhs - self.c_mon * ds
        self.worst = max(self.worst, slack)
        self.checks += 1
        if slack > self.eps:
            self.violations.append((self.checks, "charge", slack))

    def move_offline(self, state, y_new):
        move = sum(w * abs(a - b) for w, a, b in zip(state.weights, y_new, self.y))
        t0 = alloc_potentials(state, self.y).theta
        t1 = alloc_potentials(state, y_new).theta
        self.offline_movement += move
        self.checks += 1
        if t1 - t0 > self.c_mon * move + self.eps:
            self.violations.append((self.checks, "offline", t1 - t0 - self.c_mon * move))
        self.y = list(y_new)


def default_c_mon(ell):
    return 100.0 * math.log(ell + 1)


def parse_events(text):
    """Parse ``r=<int> alpha=<real> dt=<real>`` and ``strict r=<int> c=<real>`` lines.

    Directions are 1-based in the text and 0-based in the returned events.
    """
    out = []
    pat = re.compile(r"(\w+)=(\S+)")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = dict(pat.findall(line))
        try:
            r = int(fields["r"]) - 1
            if line.startswith("strict"):
                out.append(StrictEvent(r, float(fields["c"])))
            else:
                out.append(ChargeEvent(r, float(fields["alpha"]), float(fields["dt"])))
        except (KeyError, ValueError) as e:
            raise AllocError(f"line {lineno}: malformed event {raw!r}") from e
    return out


def format_events(events):
    lines = []
    for ev in events:
        if isinstance(ev, StrictEvent):
            lines.append(f"strict r={ev.direction + 1} c={ev.threshold!r}")
        else:
            lines.append(f"r={ev.direction + 1} alpha={ev.alpha!r} dt={ev.dt!r}")
    return "\n".join(lines) + ("\n" if lines else "")


def run_events(state: AllocState, events, observer=None):
    for ev in events:
        if isinstance(ev, StrictEvent):
            serve_strict(state, ev.direction, ev.threshold, observer=observer)
        else:
            alloc_step(state, ev, observer=observer)
    return state


# event suites used by the monitor checks


def random_charge_suite(ell, n_events, seed, max_alpha=0.5, max_dt=1.0):
    rng = random.Random(seed)
    return [ChargeEvent(rng.randrange(ell), rng.uniform(1e-3, max_alpha),
                        rng.uniform(1e-3, max_dt)) for _ in range(n_events)]


def strict_threshold_suite(ell, n_events, seed):
    rng = random.Random(seed)
    return [StrictEvent(rng.randrange(ell), rng.uniform(0.0, 0.9)) for _ in range(n_events)]


def random_simplex_point(ell, rng):
    g = [rng.expovariate(1.0) for _ in range(ell)]
    s = sum(g)
    return [v / s for v in g]


def feasible_offline(y, r, threshold):
    """Smallest move putting y_r at the threshold, taking mass evenly from the rest."""
    if y[r] >= threshold:
        return list(y)
    need = threshold - y[r]
    out = list(y)
    out[r] = threshold
    donors = [i for i in range(len(y)) if i != r and out[i] > 0]
    while need > 1e-15 and donors:
        share = need / len(donors)
        nxt = []
        for i in donors:
            take = min(share, out[i])
            out[i] -= take
            need -= take
            if out[i] > 0:
                nxt.append(i)
        donors = nxt
    return out


def monitored_run(weights, events, seed=0, c_mon=None, offline_moves=0.05, eps=1e-6):
    """Run events under the monitor against a piecewise-constant offline point.

    For strict events the offline point is kept feasible; for charge events
    it jumps to a random point with probability ``offline_moves`` per event.
    """
    rng = random.Random(seed)
    state = AllocState.start(weights)
    ell = len(weights)
    mon = AllocMonitor(list(state.x), c_mon if c_mon is not None else default_c_mon(ell), eps)
    for ev in events:
        if isinstance(ev, StrictEvent):
            y2 = feasible_offline(mon.y, ev.direction, ev.threshold)
            if y2 != mon.y:
                mon.move_offline(state, y2)
            serve_strict(state, ev.direction, ev.threshold, observer=mon)
        else:
            if rng.random() < offline_moves:
                mon.move_offline(state, random_simplex_point(ell, rng))
            alloc_step(state, ev, observer=mon)
    return state, mon


# soft-allocation lower bound


def soft_lb_adversary(ell, T, respond=None, weights=None):
    """Play the stay-put adversary against an online allocation algorithm.

    Each round charges the currently smallest coordinate with a step cost of
    1/ell^2 below 1/(ell-1).  ``respond(state, r)`` moves the algorithm;
    by default it gets a slope -1 charge of 1/ell^2 for unit time.  The
    offline point picks the least-requested direction after the fact.
    """
    if ell < 2:
        raise AllocError("need at least two directions")
    weights = weights or [1.0] * ell
    level = 1.0 / (ell - 1)
    cost = 1.0 / ell ** 2
    state = AllocState.start(weights)
    if respond is None:
        def respond(s, r):
            alloc_step(s, ChargeEvent(r, cost, 1.0))
    online = 0.0
    counts = [0] * ell
    for _ in range(T):
        r = min(range(ell), key=lambda i: (state.x[i], i))
        counts[r] += 1
        before = list(state.x)
        respond(state, r)
        online += sum(w * abs(a - b) for w, a, b in zip(weights, state.x, before))
        if state.x[r] < level - 1e-12:
            online += cost
    star = min(range(ell), key=lambda i: (counts[i], i))
    y = [0.0 if i == star else level for i in range(ell)]
    start = [1.0 / ell] * ell
    offline = sum(w * abs(a - b) for w, a, b in zip(weights, y, start)) + counts[star] * cost
    return {"ell": ell, "T": T, "online": online, "offline": offline,
            "ratio": online / offline, "least_requested": star,
            "least_count": counts[star]}
