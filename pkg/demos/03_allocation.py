"""Continuous allocation over weighted directions: dynamics, monitor and a lower bound.

Run: python3 demos/03_allocation.py
"""

from myopic_paging import alloc

state = alloc.AllocState.start([1.0, 4.0, 16.0])
print("start x =", [round(v, 3) for v in state.x])
for ev in [alloc.ChargeEvent(2, 0.3, 1.0), alloc.StrictEvent(0, 0.7), alloc.ChargeEvent(1, 0.2, 3.0)]:
    alloc.run_events(state, [ev])
    print(f"after {ev}: x = {[round(v, 3) for v in state.x]}, movement {state.movement:.3f}")

# Every substep is checked against a potential argument with a fixed offline point.
for name, suite in [("random charges", alloc.random_charge_suite),
                    ("strict thresholds", alloc.strict_threshold_suite)]:
    _, mon = alloc.monitored_run([1.0, 2.0, 4.0, 8.0], suite(4, 100, seed=1), seed=1)
    print(f"{name}: {mon.checks} checks, {len(mon.violations)} violations, "
          f"worst slack {mon.worst:.4f}")

# Without any knowledge of the ordering, a soft allocation can be forced far from optimal.
for ell in (2, 4, 8):
    res = alloc.soft_lb_adversary(ell, 10 * ell ** 3)
    print(f"l={ell}: adversary ratio {res['ratio']:.2f}")
