"""Acceptance checks.  Each test prints one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` or as a script.
"""

import math
import random
import sys
import time

import pytest

from myopic_paging import alloc
from myopic_paging.belady import fif_monitor, simulate_fif
from myopic_paging.canonical import canonicalize
from myopic_paging.detpaging import det_run
from myopic_paging.experiments import (ExperimentConfig, GeneratorSpec, generate, report_csv,
                                       run_algorithm, run_experiment)
from myopic_paging.offline import (canonical_offline_profile, make_lazy, opt_bruteforce,
                                   opt_mincostflow)
from myopic_paging.posseq import (all_intervals_convex, check_repeat_property,
                                  realize_position_sequence, to_position_sequence)
from myopic_paging.wimp import (lambda_term, offline_profile_from_counts, pseudo_cost_check,
                                wimp_run)

sys.path.insert(0, __file__.rsplit("/", 1)[0])
from instances import (random_fractional_schedule, random_trace, riemann_lambda,  # noqa: E402
                       state_after)

_out = []


@pytest.fixture
def verdict(capsys):
    def say(name, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        _out.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return say


def test_fif_optimality(verdict):
    rng = random.Random(101)
    t0 = time.time()
    mismatch = violations = 0
    for _ in range(1000):
        tr = random_trace(rng, 1, 8, rng.randint(1, 4), rng.randint(0, 20), weights=[1])
        pages = [p for _, p in tr.requests]
        opt, sched = opt_bruteforce(tr, with_schedule=True)
        mismatch += simulate_fif(pages, tr.k)[1] != opt
        rep = fif_monitor(pages, tr.k, make_lazy(tr, sched.states), tr.universe[0])
        violations += len(rep["violations"])
    dt = time.time() - t0
    verdict("FiF optimality", mismatch == 0 and violations == 0 and dt < 60,
            f"1000 instances, {mismatch} cost mismatches, {violations} stepwise violations, "
            f"{dt:.1f}s (limit 60s)")


def test_flow_equals_bruteforce(verdict):
    rng = random.Random(102)
    t0 = time.time()
    mismatch = 0
    for _ in range(500):
        tr = random_trace(rng, rng.randint(1, 4), 10, rng.randint(1, 5), rng.randint(0, 25))
        mismatch += opt_mincostflow(tr)[0] != opt_bruteforce(tr)
    dt = time.time() - t0
    verdict("Oracle equivalence", mismatch == 0 and dt < 120,
            f"500 weighted instances, {mismatch} mismatches, {dt:.1f}s (limit 120s)")


def test_deterministic_competitiveness(verdict):
    rng = random.Random(103)
    t0 = time.time()
    over = bad = 0
    worst = 0.0
    for i in range(500):
        ell = (2, 3, 4)[i % 3]
        tr = random_trace(rng, ell, 12, rng.randint(1, 4), rng.randint(1, 40))
        opt, sched = opt_mincostflow(tr)
        ledger, rep = det_run(tr, make_lazy(tr, sched.states))
        bound = ell * opt + sum(tr.weights.weights) * tr.k
        over += ledger.load_cost > bound
        bad += bool(rep["violations"] or rep["drain_violations"])
        if opt:
            worst = max(worst, float(ledger.load_cost / opt) / ell)
    dt = time.time() - t0
    verdict("Deterministic l-competitiveness", over == 0 and bad == 0 and dt < 120,
            f"500 instances, {over} bound failures, {bad} runs with stepwise violations, "
            f"max On/(l*OPT) {worst:.3f}, {dt:.1f}s (limit 120s)")


def test_canonicalization_factor(verdict):
    rng = random.Random(104)
    worst = 0.0
    for _ in range(200):
        tr = random_trace(rng, rng.randint(1, 4), 12, rng.randint(1, 4), rng.randint(1, 30))
        _, c_in, c_out = canonicalize(tr, random_fractional_schedule(rng, tr))
        worst = max(worst, c_out / c_in)
    verdict("Canonicalization factor", worst <= 3 + 1e-9,
            f"200 fractional schedules, max cost ratio {worst:.4f} (limit 3)")


def _repeat_sequence(rng, n, top):
    h, last = [], {}
    for t in range(n):
        legal = [v for v in range(1, top + 1)
                 if v not in last or all(last.get(m, -1) > last[v] for m in range(2, v))]
        v = rng.choice(legal)
        last[v] = t
        h.append(v)
    return h


def test_repeat_property_characterization(verdict):
    rng = random.Random(105)
    trips = checks = convex = 0
    seqs = []
    for _ in range(1000):
        h = _repeat_sequence(rng, rng.randint(0, 40), rng.randint(1, 8))
        pages, uni = realize_position_sequence(h)
        trips += to_position_sequence(pages, uni) == h
        seqs.append(h)
    for _ in range(1000):
        alphabet = [f"p{i}" for i in range(rng.randint(1, 8))]
        pages = [rng.choice(alphabet) for _ in range(rng.randint(0, 40))]
        h = to_position_sequence(pages, alphabet)
        checks += check_repeat_property(h)[0]
        seqs.append(h)
    convex = sum(all_intervals_convex(h)[0] for h in seqs)
    ok = trips == 1000 and checks == 1000 and convex == 2000
    verdict("Repeat-property characterization", ok,
            f"round trips {trips}/1000, extracted sequences passing {checks}/1000, "
            f"convexity on all intervals {convex}/2000")


def test_convex_allocation(verdict):
    t0 = time.time()
    steps = [0]
    broken = [0]

    def watch(before, after, h, a, b, r):
        steps[0] += 1
        if abs(sum(after.x) - 1) > 1e-12 or any(c < x for c, x in zip(after.c, after.x)):
            broken[0] += 1

    rng = random.Random(106)
    seed = 0
    while steps[0] < 10 ** 5:
        ell = rng.choice([2, 4, 8])
        s = alloc.AllocState.start([rng.uniform(1, 30) for _ in range(ell)])
        for ev in alloc.random_charge_suite(ell, 200, seed):
            alloc.alloc_step(s, ev, observer=watch)
        seed += 1

    fd_bad = 0
    for _ in range(1000):
        ell = rng.choice([2, 4, 8])
        delta = 1 / ell
        y = rng.random()
        x = y + rng.uniform(0.01, 1.0)
        rho = rng.uniform(0.0, 1.0)
        h = 1e-5 * (rho + x - y)
        fd = (alloc.phi_term(rho, x + h, y, delta) - alloc.phi_term(rho, x - h, y, delta)) / (2 * h)
        fy = (alloc.phi_term(rho, x, y + h, delta) - alloc.phi_term(rho, x, y - h, delta)) / (2 * h)
        g = alloc.dphi_dx(rho, x, y, delta)
        ok = abs(fd - g) <= 1e-6 * abs(g) and abs(fy + g) <= 1e-6 * abs(g)
        ok &= 0 <= g <= math.log(ell + 1) + 1
        if rho > h:
            fr = (alloc.phi_term(rho + h, x, y, delta) - alloc.phi_term(rho - h, x, y, delta)) / (2 * h)
            gr = alloc.dphi_drho(rho, x, y, delta)
            ok &= abs(fr - gr) <= 1e-6 * max(abs(gr), 1e-12) and gr <= math.log(ell + 1) + 1
        fd_bad += not ok

    mon_bad, mon_checks, worst = 0, 0, -math.inf
    for ell in (2, 4, 8):
        w = sorted(random.Random(ell).sample(range(1, 50), ell))
        for suite in (alloc.random_charge_suite, alloc.strict_threshold_suite):
            _, mon = alloc.monitored_run(w, suite(ell, 200, ell), seed=ell,
                                         c_mon=alloc.default_c_mon(ell), eps=1e-6)
            mon_bad += len(mon.violations)
            mon_checks += mon.checks
            worst = max(worst, mon.worst)
    dt = time.time() - t0
    ok = broken[0] == 0 and fd_bad == 0 and mon_bad == 0
    verdict("Convex allocation", ok,
            f"{steps[0]} steps with {broken[0]} invariant breaks; {fd_bad}/1000 derivative "
            f"checks failed; monitor {mon_bad} violations in {mon_checks} checks "
            f"(worst slack {worst:.3g}), {dt:.1f}s")


def test_soft_allocation_lower_bound(verdict):
    res = alloc.soft_lb_adversary(8, 10 * 8 ** 3)
    verdict("Soft-allocation lower bound", res["ratio"] >= 4,
            f"l=8, T=5120, online {res['online']:.2f}, offline {res['offline']:.3f}, "
            f"ratio {res['ratio']:.2f} (need >= 4)")


def _wimp_suite():
    cases = []
    for fam in ("cyclic", "mixed", "uniform"):
        for ell in (1, 2, 3, 4):
            cases.append((GeneratorSpec(family=fam, ell=ell, k=3, n=7, T=300), 0))
        cases.append((GeneratorSpec(family=fam, ell=4, k=4, n=8, T=2000), 1))
    return cases


def test_wimp_invariants(verdict):
    t0 = time.time()
    inv = infeasible = pseudo_bad = 0
    worst_pseudo = 0.0
    for spec, seed in _wimp_suite():
        tr = generate(spec, seed)
        run = wimp_run(tr)
        inv += len(run.invariant_failures)
        padded = tr.padded(tr.k)
        infeasible += sum(rec["x"][r] < 1 - 1e-9
                          for rec, (r, _) in zip(run.records, padded.requests))
        pseudo_bad += not pseudo_cost_check(run, tr.weights.weights, tr.k)
        if run.pseudo > 0:
            slack = sum(tr.weights.weights) * tr.k
            worst_pseudo = max(worst_pseudo, (run.true_cost - slack) / run.pseudo)
    rng = random.Random(108)
    lam_err = 0.0
    for _ in range(6):
        tr = random_trace(rng, rng.randint(2, 4), 14, rng.randint(2, 4), 80)
        s = state_after(tr, rng.randint(20, 80))
        for i in range(s.ell):
            y = max(0.0, s.x[i] - rng.uniform(0.1, 2.0))
            lam_err = max(lam_err, abs(lambda_term(s, i, y) - riemann_lambda(s, i, y)))
    dt = time.time() - t0
    ok = inv == 0 and infeasible == 0 and pseudo_bad == 0 and lam_err <= 1e-3
    verdict("WIMP invariants", ok,
            f"{len(_wimp_suite())} runs (T up to 2000): {inv} invariant failures, "
            f"{infeasible} infeasible requests, {pseudo_bad} pseudo-cost failures "
            f"(max (cost - additive)/pseudo {worst_pseudo:.2f}, limit 18); "
            f"max Lambda error vs Riemann {lam_err:.2e}; {dt:.1f}s")


def test_wimp_monitor_and_growth(verdict):
    t0 = time.time()
    events = bad = 0
    for fam in ("cyclic", "mixed", "uniform"):
        for ell in (2, 3, 4):
            for seed in (0, 1):
                tr = generate(GeneratorSpec(family=fam, ell=ell, k=3, n=7, T=300), seed)
                opt, sched = opt_mincostflow(tr)
                tp = tr.padded(tr.k)
                run = wimp_run(tr, offline=offline_profile_from_counts(tp, sched.class_counts(tp)),
                               c_mon=100.0, eps=1e-6)
                events += len(run.records)
                bad += len(run.violations)

    ratios = {}
    for ell in (2, 4, 8, 16):
        vals = []
        for seed in range(3):
            tr = generate(GeneratorSpec(family="mixed", ell=ell, k=4, n=8, T=400), seed)
            opt, sched = opt_mincostflow(tr)
            canon = canonical_offline_profile(sched, tr)[1].load_cost
            row = run_algorithm(tr, "wimp", opt, sched, canon_opt=canon)
            vals.append(row["canon_ratio"])
        ratios[ell] = max(vals)
    limit = 3 * math.log(17) / math.log(3)
    growth = ratios[16] / ratios[2]

    tr = generate(GeneratorSpec(family="mixed", ell=4, k=4, n=8, T=2000), 7)
    opt, _ = opt_mincostflow(tr)
    big = float(wimp_run(tr, check=False).ledger.load_cost) / float(opt)
    dt = time.time() - t0
    ok = bad == 0 and growth <= limit and big <= 64 * math.log(5) and dt < 600
    shown = ", ".join(f"l={k}: {v:.3f}" for k, v in ratios.items())
    verdict("WIMP monitor and ratio growth", ok,
            f"{events} monitored events, {bad} violations (c_mon=100); ratio vs canonical OPT "
            f"{shown}; ratio(16)/ratio(2) {growth:.3f} (limit {limit:.3f}); "
            f"l=4 T=2000 ratio vs OPT {big:.3f}; {dt:.1f}s (limit 600s)")


def test_reproducibility(verdict):
    cfgs = [
        ExperimentConfig(GeneratorSpec(family=f, ell=3, k=3, n=6, T=120), [0, 1, 2],
                         ["fif", "det", "wimp", "wimp-rounded"], monitor=True)
        for f in ("cyclic", "mixed", "uniform")
    ] + [ExperimentConfig(GeneratorSpec(family="soft-lb", ell=4, T=640), [0])]
    first = [report_csv(run_experiment(c)) for c in cfgs]
    second = [report_csv(run_experiment(c)) for c in cfgs]
    s1 = alloc.monitored_run([1, 2, 4], alloc.random_charge_suite(3, 50, 9), seed=9)[0]
    s2 = alloc.monitored_run([1, 2, 4], alloc.random_charge_suite(3, 50, 9), seed=9)[0]
    same = first == second and s1.x == s2.x and s1.c == s2.c
    verdict("Reproducibility", same,
            f"{len(cfgs)} experiment reports byte-identical across reruns: {first == second}; "
            f"allocation state identical: {s1.x == s2.x}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
