"""The deterministic level algorithm on a weighted trace, checked against the optimum.

Run: python3 demos/02_levels.py
"""

from myopic_paging.detpaging import det_run
from myopic_paging.experiments import GeneratorSpec, generate
from myopic_paging.offline import make_lazy, opt_mincostflow

spec = GeneratorSpec(family="mixed", ell=3, k=3, n=6, T=150, weights=[1, 4, 16])
print("classes weigh", spec.weights, "and share a cache of", spec.k, "pages")
for seed in range(5):
    trace = generate(spec, seed)
    opt, sched = opt_mincostflow(trace)
    ledger, report = det_run(trace, make_lazy(trace, sched.states))
    additive = sum(spec.weights) * spec.k
    print(f"seed {seed}: online {ledger.load_cost}, optimum {opt}, "
          f"ratio {float(ledger.load_cost / opt):.2f} (guarantee {spec.ell} plus {additive}/OPT), "
          f"stepwise potential checks failed: {len(report['violations'])}")

# The potential after each request is kept as an exact fraction.
print("potential over the last five requests:", [str(p) for p in report["potential"][-5:]])
