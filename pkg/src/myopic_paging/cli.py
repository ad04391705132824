"""Command line: gen, run, opt, monitor and report."""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import alloc
from .core import dump_trace, load_trace
from .detpaging import det_run
from .experiments import (ALGORITHMS, FAMILIES, ExperimentConfig, GeneratorSpec, emit_report,
                          generate, run_algorithm, run_experiment)
from .offline import make_lazy, opt_mincostflow
from .wimp import offline_profile_from_counts, wimp_run


def _json_default(o):
    if isinstance(o, Fraction):
        return str(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


def _write(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _read_trace(path):
    with open(path) as fh:
        return load_trace(fh.read())


def _spec_from_args(a):
    weights = [Fraction(w) for w in a.weights.split(",")] if a.weights else None
    return GeneratorSpec(a.family, a.ell, a.k, a.n, a.T, weights, a.skew, a.cycle_max)


def cmd_gen(a):
    trace = generate(_spec_from_args(a), a.seed)
    _write(dump_trace(trace), a.out)
    return 0


def cmd_run(a):
    trace = _read_trace(a.trace)
    opt, sched = opt_mincostflow(trace)
    rows = [run_algorithm(trace, algo, opt, sched, seed=a.seed) for algo in a.algo]
    _write(_dump(rows), a.out)
    return 0


def cmd_opt(a):
    trace = _read_trace(a.trace)
    opt, sched = opt_mincostflow(trace)
    result = {"opt": opt,
              "schedule": {str(t): sorted(map(str, s)) for t, s in enumerate(sched.states)}}
    if not a.schedule:
        del result["schedule"]
    _write(_dump(result), a.out)
    return 0


def cmd_monitor(a):
    if a.algo == "alloc":
        with open(a.input) as fh:
            events = alloc.parse_events(fh.read())
        weights = [float(w) for w in a.weights.split(",")] if a.weights else None
        if weights is None:
            ell = max((ev.direction for ev in events), default=0) + 1
            weights = [1.0] * ell
        c_mon = a.c_mon if a.c_mon is not None else alloc.default_c_mon(len(weights))
        _, mon = alloc.monitored_run(weights, events, seed=a.seed, c_mon=c_mon, eps=a.tolerance)
        summary = {"checks": mon.checks, "violations": len(mon.violations),
                   "worst_slack": mon.worst, "c_mon": c_mon}
        _write(_dump(summary), a.out)
        return 1 if mon.violations else 0
    trace = _read_trace(a.input)
    opt, sched = opt_mincostflow(trace)
    if a.algo == "det":
        ledger, rep = det_run(trace, make_lazy(trace, sched.states))
        bad = rep["violations"] + rep["drain_violations"]
        summary = {"events": rep["events"], "violations": [list(v) for v in bad],
                   "cost": ledger.load_cost, "opt": opt}
        _write(_dump(summary), a.out)
        return 1 if bad else 0
    tr = trace.padded(trace.k)
    off = offline_profile_from_counts(tr, sched.class_counts(tr))
    c_mon = a.c_mon if a.c_mon is not None else 100.0
    jsonl = a.out if a.out not in (None, "-") else None
    run = wimp_run(trace, offline=off, c_mon=c_mon, eps=a.tolerance, jsonl=jsonl)
    summary = {"events": len(run.records), "violations": len(run.violations),
               "invariant_failures": len(run.invariant_failures),
               "cost": run.ledger.load_cost, "pseudo": run.pseudo, "opt": opt}
    sys.stderr.write(_dump(summary)) if jsonl else _write(_dump(summary), None)
    return 1 if run.violations or run.invariant_failures else 0


def cmd_report(a):
    with open(a.config) as fh:
        cfg = ExperimentConfig.from_dict(json.load(fh))
    if a.seed is not None:
        cfg.seeds = [a.seed]
    if a.c_mon is not None:
        cfg.c_mon = a.c_mon
    if a.tolerance is not None:
        cfg.tolerance = a.tolerance
    rows = run_experiment(cfg)
    paths = emit_report(rows, a.out or "report")
    for p in paths:
        print(p)
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="myopic-paging",
                                 description="Weighted paging with per-class future knowledge.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a request trace")
    g.add_argument("--family", choices=[f for f in FAMILIES if f != "soft-lb"], default="mixed")
    g.add_argument("--ell", type=int, default=2)
    g.add_argument("--k", type=int, default=3)
    g.add_argument("--n", type=int, default=6, help="pages per class")
    g.add_argument("--T", type=int, default=200)
    g.add_argument("--weights", help="comma-separated class weights (default powers of two)")
    g.add_argument("--skew", type=float, default=0.0)
    g.add_argument("--cycle-max", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run algorithms on a trace and print their costs")
    r.add_argument("trace")
    r.add_argument("--algo", nargs="+", choices=ALGORITHMS, default=["det", "wimp"])
    r.add_argument("--seed", type=int, default=0, help="seed for randomized rounding")
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)

    o = sub.add_parser("opt", help="offline optimum of a trace")
    o.add_argument("trace")
    o.add_argument("--schedule", action="store_true", help="include the optimal schedule")
    o.add_argument("--out")
    o.set_defaults(func=cmd_opt)

    m = sub.add_parser("monitor", help="run an algorithm under its potential-function monitor")
    m.add_argument("input", help="trace file (det, wimp) or event file (alloc)")
    m.add_argument("--algo", choices=["det", "wimp", "alloc"], default="wimp")
    m.add_argument("--weights", help="class weights for alloc event files")
    m.add_argument("--c-mon", type=float, help="monitor constant (wimp: multiplies ln(l+1))")
    m.add_argument("--tolerance", type=float, default=1e-6)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out", help="wimp: JSON-lines event log; otherwise the summary")
    m.set_defaults(func=cmd_monitor)

    p = sub.add_parser("report", help="run an experiment config and write CSV and JSON")
    p.add_argument("config", help="JSON experiment config")
    p.add_argument("--seed", type=int, help="run this single seed instead")
    p.add_argument("--c-mon", type=float)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--out", help="output directory (default ./report)")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
