"""Instance generators, the experiment runner and report files."""

from __future__ import annotations

import csv
import io
import json
import math
import random
from dataclasses import asdict, dataclass, field

from .alloc import soft_lb_adversary
from .belady import simulate_fif
from .canonical import round_online
from .core import RequestTrace, make_trace, validate_schedule
from .detpaging import det_run
from .offline import canonical_offline_profile, make_lazy, opt_mincostflow
from .posseq import check_repeat_property, realize_position_sequence
from .wimp import offline_profile_from_counts, wimp_run

FAMILIES = ("cyclic", "mixed", "uniform", "soft-lb")
ALGORITHMS = ("fif", "det", "wimp", "wimp-rounded")


class SpecError(ValueError):
    pass


@dataclass
class GeneratorSpec:
    family: str = "mixed"
    ell: int = 2
    k: int = 3
    n: int = 6  # pages per class
    T: int = 200
    weights: list = None  # default: powers of two
    skew: float = 0.0  # class j drawn with probability proportional to exp(-skew*j)
    cycle_max: int = None  # largest cycle end point (default n)

    def weight_list(self):
        if self.weights is not None:
            if len(self.weights) != self.ell:
                raise SpecError("weights must have ell entries")
            return list(self.weights)
        return [2 ** j for j in range(self.ell)]


def _legal(last, v):
    """Can v come next without breaking the repeat property?"""
    lv = last.get(v)
    if lv is None:
        return True
    return all(last.get(m, -1) > lv for m in range(2, v))


def cyclic_positions(length, top, rng, ends=None):
    """Concatenated cycles 2..m.

    Cycle ends come from ``ends`` first, then uniformly from [2, top].
    """
    out = []
    ends = list(ends or [])
    while len(out) < length:
        m = ends.pop(0) if ends else rng.randint(2, top)
        out.extend(range(2, m + 1))
    return out[:length]


def mixed_positions(length, top, rng, p_new=0.3):
    """Several interleaved incomplete cycles.

    Each step either starts a new cycle at 2 or advances an active cycle
    from its end m to m + 1.  Advances that would break the repeat
    property are skipped, and cycles that meet merge.
    """
    out, last, active = [], {}, []
    for t in range(length):
        cands = [m + 1 for m in active if m + 1 <= top and _legal(last, m + 1)]
        if not cands or rng.random() < p_new:
            v = 2
        else:
            v = rng.choice(cands)
        if v == 2:
            active.append(2)
        else:
            active.remove(v - 1)
            if v not in active:
                active.append(v)
        active = sorted(set(active), reverse=True)
        last[v] = t
        out.append(v)
    return out


def _class_draws(spec, rng):
    weights = [math.exp(-spec.skew * j) for j in range(spec.ell)]
    return rng.choices(range(spec.ell), weights=weights, k=spec.T)


def generate(spec: GeneratorSpec, seed: int) -> RequestTrace:
    """A seeded trace of the given family."""
    if spec.family not in FAMILIES or spec.family == "soft-lb":
        raise SpecError(f"cannot generate a trace for family {spec.family!r}")
    if spec.ell < 1 or spec.k < 1 or spec.n < 1 or spec.T < 0:
        raise SpecError("ell, k and n must be positive")
    rng = random.Random(seed)
    draws = _class_draws(spec, rng)
    counts = [draws.count(j) for j in range(spec.ell)]
    top = spec.cycle_max or spec.n
    if top > spec.n:
        raise SpecError("cycle end exceeds the class universe")
    pages, universe = [], []
    for j in range(spec.ell):
        if spec.family == "uniform":
            uni = [f"c{j + 1}p{i + 1}" for i in range(spec.n)]
            pages.append([rng.choice(uni) for _ in range(counts[j])])
            universe.append(uni)
            continue
        if spec.family == "cyclic":
            h = cyclic_positions(counts[j], max(2, top), rng)
        else:
            h = mixed_positions(counts[j], max(2, top), rng)
        ok, bad = check_repeat_property(h)
        if not ok:
            raise SpecError(f"generated positions break the repeat property at {bad}")
        pg, uni = realize_position_sequence(h, prefix=f"c{j + 1}p")
        uni = uni + [f"c{j + 1}p{i + 1}" for i in range(len(uni), spec.n)]
        pages.append(pg)
        universe.append(uni)
    pos = [0] * spec.ell
    reqs = []
    for j in draws:
        reqs.append((j, pages[j][pos[j]]))
        pos[j] += 1
    return make_trace(spec.weight_list(), spec.k, reqs, universe)


@dataclass
class ExperimentConfig:
    generator: GeneratorSpec = field(default_factory=GeneratorSpec)
    seeds: list = field(default_factory=lambda: [0])
    algorithms: list = field(default_factory=lambda: ["det", "wimp"])
    monitor: bool = False
    c_mon: float = 100.0
    tolerance: float = 1e-6

    @classmethod
    def from_dict(cls, d):
        g = GeneratorSpec(**d.get("generator", {}))
        seeds = d.get("seeds", [0])
        if isinstance(seeds, int):
            seeds = list(range(seeds))
        algos = d.get("algorithms", ["det", "wimp"])
        for a in algos:
            if a not in ALGORITHMS:
                raise SpecError(f"unknown algorithm {a!r}")
        return cls(g, list(seeds), list(algos), bool(d.get("monitor", False)),
                   float(d.get("c_mon", 100.0)), float(d.get("tolerance", 1e-6)))

    def to_dict(self):
        return asdict(self)


def run_algorithm(trace: RequestTrace, algo: str, opt=None, schedule=None, monitor=False,
                  c_mon=100.0, tolerance=1e-6, seed=0, canon_opt=None):
    """Cost and monitor verdict of one algorithm on one trace.

    Ratios are raw online load cost (initial fill included) over ``opt``
    and, when given, over the cost of the canonicalized optimum.
    """
    row = {"algorithm": algo}
    if algo == "fif":
        pages = [p for _, p in trace.requests]
        states, _ = simulate_fif(pages, trace.k)
        cost = validate_schedule(trace, states).load_cost
        row.update(cost=float(cost), monitor_pass=None, violations=0)
    elif algo == "det":
        lazy = make_lazy(trace, schedule.states) if monitor else None
        ledger, rep = det_run(trace, lazy)
        row.update(cost=float(ledger.load_cost),
                   monitor_pass=(not rep["violations"] and not rep["drain_violations"])
                   if monitor else None,
                   violations=len(rep["violations"]) + len(rep["drain_violations"]))
    elif algo in ("wimp", "wimp-rounded"):
        off = None
        tr = trace.padded(trace.k)
        if monitor:
            off = offline_profile_from_counts(tr, schedule.class_counts(tr))
        run = wimp_run(trace, offline=off, c_mon=c_mon, eps=tolerance)
        if algo == "wimp":
            row.update(cost=float(run.ledger.load_cost), pseudo=run.pseudo,
                       monitor_pass=(not run.violations) if monitor else None,
                       violations=len(run.violations) + len(run.invariant_failures))
        else:
            states = round_online(tr, run.profile, seed)
            cost = validate_schedule(tr, states).load_cost
            row.update(cost=float(cost), monitor_pass=None, violations=0)
    else:
        raise SpecError(f"unknown algorithm {algo!r}")
    if opt is not None:
        row["opt"] = float(opt)
        row["ratio"] = _ratio(row["cost"], opt)
    if canon_opt is not None:
        row["canon_opt"] = float(canon_opt)
        row["canon_ratio"] = _ratio(row["cost"], canon_opt)
    return row


def _ratio(cost, opt):
    if opt:
        return cost / float(opt)
    return 1.0 if cost == 0 else math.inf


def run_experiment(config: ExperimentConfig):
    """One row per (seed, algorithm), in seed order then algorithm order."""
    g = config.generator
    rows = []
    if g.family == "soft-lb":
        res = soft_lb_adversary(g.ell, g.T, weights=g.weights)
        for seed in config.seeds:
            rows.append({"family": g.family, "ell": g.ell, "k": 1, "n": g.ell, "T": g.T,
                         "seed": seed, "algorithm": "alloc", "cost": res["online"],
                         "opt": res["offline"], "ratio": res["ratio"]})
        return rows
    for seed in config.seeds:
        try:
            trace = generate(g, seed)
            opt, sched = opt_mincostflow(trace)
            canon = canonical_offline_profile(sched, trace)[1].load_cost
        except Exception as e:
            raise RuntimeError(f"family={g.family} seed={seed}: {e}") from e
        for algo in config.algorithms:
            try:
                row = run_algorithm(trace, algo, opt, sched, config.monitor,
                                    config.c_mon, config.tolerance, seed, canon)
            except Exception as e:
                raise RuntimeError(f"family={g.family} seed={seed} algorithm={algo}: {e}") from e
            base = {"family": g.family, "ell": g.ell, "k": g.k, "n": g.n, "T": g.T, "seed": seed}
            base.update(row)
            rows.append(base)
    return rows


CSV_COLUMNS = ["family", "ell", "k", "n", "T", "seed", "algorithm", "cost", "opt",
               "ratio", "canon_opt", "canon_ratio", "pseudo", "monitor_pass",
               "violations"]


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def report_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def report_summary(rows):
    groups = {}
    for r in rows:
        groups.setdefault(f"{r['family']}/{r['algorithm']}", []).append(r)
    out = {}
    for key in sorted(groups):
        g = groups[key]
        ratios = [r["ratio"] for r in g if r.get("ratio") is not None]
        cratios = [r["canon_ratio"] for r in g if r.get("canon_ratio") is not None]
        mons = [r["monitor_pass"] for r in g if r.get("monitor_pass") is not None]
        out[key] = {
            "runs": len(g),
            "max_ratio": max(ratios) if ratios else None,
            "mean_ratio": sum(ratios) / len(ratios) if ratios else None,
            "max_canon_ratio": max(cratios) if cratios else None,
            "monitor_pass_rate": sum(mons) / len(mons) if mons else None,
        }
    return out


def emit_report(rows, out_dir):
    """Write results.csv and summary.json into out_dir; returns their paths."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "results.csv")
    json_path = os.path.join(out_dir, "summary.json")
    with open(csv_path, "w", newline="") as fh:
        fh.write(report_csv(rows))
    with open(json_path, "w") as fh:
        json.dump(report_summary(rows), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path
