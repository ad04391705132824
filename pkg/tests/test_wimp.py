import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import myopic_paging.wimp as wimp
from myopic_paging.belady import simulate_fif
from myopic_paging.core import make_trace
from myopic_paging.offline import opt_mincostflow
from myopic_paging.wimp import (NEVER, IntervalSet, PositionTimeline, WimpState,
                                check_invariants, instantaneous_rates, lambda_term,
                                offline_profile_from_counts, pseudo_cost_check,
                                recent_overlap, wimp_potentials, wimp_run, wimp_serve)

from instances import random_trace, riemann_lambda, state_after


def test_remove_left():
    s = IntervalSet([(0, 1)])
    s.remove_left(0.25)
    assert list(s) == [(0.25, 1)]
    assert s.measure() == pytest.approx(0.75)


def test_remove_right_drops_whole_interval():
    s = IntervalSet([(0, 0.5), (2, 2.5)])
    s.remove_right(0.5)
    assert list(s) == [(0, 0.5)]


def test_add_from_range_pushes_boundary():
    s = IntervalSet([(0, 0.5)])
    s.add_from_range(0.5, 2, 0.3)
    assert list(s) == [(0, pytest.approx(0.8))]


def test_add_from_range_merges_on_the_way():
    s = IntervalSet([(0, 0.5), (0.6, 0.7)])
    added = s.add_from_range(0.4, 2, 0.3)
    assert added == pytest.approx(0.3)
    # fills the gap (0.5, 0.6], joins (0.6, 0.7] and pushes on to 0.9
    assert list(s) == [(0, pytest.approx(0.9))]


def test_removal_beyond_measure_rejected():
    with pytest.raises(wimp.WimpError):
        IntervalSet([(0, 1)]).remove_left(2)


@given(st.lists(st.tuples(st.floats(0, 10), st.floats(0, 2)), max_size=12))
@settings(max_examples=150, deadline=None)
def test_union_measure_matches_grid(pieces):
    s = IntervalSet()
    for lo, ln in pieces:
        s.add_interval(lo, lo + ln)
    ivs = list(s)
    assert all(a < b for a, b in ivs)
    assert all(ivs[i][1] < ivs[i + 1][0] for i in range(len(ivs) - 1))
    step = 1e-3
    grid = sum(step for i in range(12000)
               if any(lo < (i + 0.5) * step <= lo + ln for lo, ln in pieces))
    assert s.measure() == pytest.approx(grid, abs=0.05)


def history_stamp(history, u):
    s = NEVER
    for lo, hi, st_ in history:
        if lo < u <= hi:
            s = st_
    return s


@given(st.lists(st.tuples(st.integers(0, 6), st.integers(1, 3)), max_size=15),
       st.lists(st.floats(0.01, 9), min_size=1, max_size=10))
@settings(max_examples=150, deadline=None)
def test_timeline_matches_history(sweeps, probes):
    tl, hist = PositionTimeline(), []
    for clock, (lo, ln) in enumerate(sweeps, 1):
        tl.record(float(lo), float(lo + ln), clock)
        hist.append((lo, lo + ln, clock))
    for u in probes:
        assert tl.stamp(u) == history_stamp(hist, u)


def test_recent_overlap_example():
    tl = PositionTimeline()
    tl.record(1.0, 3.0, 1)
    tl.record(1.0, 2.0, 2)
    assert recent_overlap(tl, 2.5, (1.0, 3.0)) == pytest.approx(1.0)


def test_recent_overlap_never_swept_and_empty():
    tl = PositionTimeline()
    tl.record(0.0, 1.0, 1)
    assert recent_overlap(tl, 4.5, (0.5, 3.0)) == pytest.approx(2.5)
    assert recent_overlap(tl, 0.5, (2.0, 2.0)) == 0.0


def test_rate_example():
    s = WimpState((1.0, 1.0), 4, [2.0, 2.0], [0.25, 0.25],
                  [IntervalSet([(2.0, 2.25)]), IntervalSet([(2.0, 2.25)])],
                  [PositionTimeline(), PositionTimeline()])
    dx, drho, gamma = instantaneous_rates(s, 0, 1.0)
    assert gamma == pytest.approx(2.0)
    assert dx == pytest.approx([0.5, -0.5])
    assert drho == pytest.approx([-1.5, 0.5])


def test_request_below_allocation_does_not_move():
    s = WimpState.start((1.0, 2.0), 4)
    before = list(s.x)
    wimp_serve(s, 0, 1)
    wimp_serve(s, 0, 2)
    assert s.x == before
    assert s.moved == 0


@pytest.mark.parametrize("q", [3, 4, 6])
def test_pointer_duration(monkeypatch, q):
    s = WimpState.start((1.0, 2.0, 4.0), 6)
    x0 = s.x[1]
    total = []
    orig = wimp._apply

    def spy(state, r, dx, drho, gamma, h, *rest):
        total.append(h)
        return orig(state, r, dx, drho, gamma, h, *rest)

    monkeypatch.setattr(wimp, "_apply", spy)
    wimp_serve(s, 1, q)
    assert sum(total) == pytest.approx(min(1.0, max(0.0, q - x0)) / 8, rel=1e-9)


def test_potentials_at_offline_point():
    rng = random.Random(1)
    tr = random_trace(rng, 3, 12, 3, 80)
    run_state = state_after(tr, 60)
    y = list(run_state.x)
    rep = wimp_potentials(run_state, y)
    assert rep.lam == 0.0
    assert rep.scatter == pytest.approx(sum(w * r for w, r in zip(run_state.weights,
                                                                  run_state.rho)))


def test_lambda_matches_riemann_sums():
    rng = random.Random(2)
    checked = 0
    for _ in range(6):
        tr = random_trace(rng, rng.randint(2, 3), 12, rng.randint(2, 4), 60)
        s = state_after(tr, rng.randint(10, 60))
        for i in range(s.ell):
            y = max(0.0, s.x[i] - rng.uniform(0.1, 2.0))
            exact = lambda_term(s, i, y)
            assert exact == pytest.approx(riemann_lambda(s, i, y), abs=1e-3)
            checked += exact > 0
    assert checked > 0


def test_empty_and_single_request_runs():
    empty = make_trace([1, 2], 2, [])
    run = wimp_run(empty)
    assert run.pseudo == 0 and run.true_cost == 0
    assert pseudo_cost_check(run, [1, 2], 2)
    one = make_trace([1, 2], 2, [(1, "b")])
    run = wimp_run(one)
    assert pseudo_cost_check(run, [1, 2], 2)


def _monitored(tr, **kw):
    opt, sched = opt_mincostflow(tr)
    tp = tr.padded(tr.k)
    off = offline_profile_from_counts(tp, sched.class_counts(tp))
    return opt, wimp_run(tr, offline=off, **kw)


def test_runs_keep_invariants_and_pass_monitor():
    rng = random.Random(3)
    for _ in range(6):
        ell = rng.randint(1, 4)
        tr = random_trace(rng, ell, 16, rng.randint(1, 4), 150)
        opt, run = _monitored(tr)
        assert run.invariant_failures == []
        assert run.violations == []
        assert pseudo_cost_check(run, tr.weights.weights, tr.k)
        assert all(rec["pass"] for rec in run.records)


def test_single_class_close_to_fif():
    rng = random.Random(4)
    for _ in range(5):
        tr = random_trace(rng, 1, 8, 3, 120, weights=[1])
        run = wimp_run(tr)
        fif = simulate_fif([p for _, p in tr.requests], tr.k)[1]
        assert run.ledger.load_cost <= 4 * fif + tr.k


def test_invariant_checker_reports_problems():
    s = WimpState.start((1.0, 2.0), 3)
    s.rho[0] = 0.3
    assert any("|S|" in p for p in check_invariants(s))


def test_monitor_flags_frozen_rates(monkeypatch):
    orig = wimp.instantaneous_rates

    def frozen(state, r, in_set):
        dx, drho, gamma = orig(state, r, in_set)
        return dx, [0.0] * len(drho), gamma

    monkeypatch.setattr(wimp, "instantaneous_rates", frozen)
    rng = random.Random(0)
    caught = 0
    for _ in range(4):
        tr = random_trace(rng, 3, 12, 3, 100)
        caught += bool(_monitored(tr)[1].violations)
    assert caught > 0


def test_jsonl_log(tmp_path):
    tr = random_trace(random.Random(5), 2, 8, 2, 20)
    path = tmp_path / "log.jsonl"
    _monitored(tr, jsonl=str(path))
    lines = path.read_text().splitlines()
    assert len(lines) == 20
    assert '"potentials"' in lines[0]
