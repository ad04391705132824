"""The fractional algorithm with interleaved classes, under its monitor.

Run: python3 demos/04_wimp.py   (about half a minute)
"""

from myopic_paging.experiments import (ExperimentConfig, GeneratorSpec, generate,
                                       report_summary, run_experiment)
from myopic_paging.offline import opt_mincostflow
from myopic_paging.wimp import offline_profile_from_counts, wimp_run

trace = generate(GeneratorSpec(family="mixed", ell=3, k=3, n=7, T=200), seed=0)
opt, sched = opt_mincostflow(trace)
padded = trace.padded(trace.k)
run = wimp_run(trace, offline=offline_profile_from_counts(padded, sched.class_counts(padded)))
print(f"one trace: fractional cost {float(run.ledger.load_cost):.1f}, optimum {opt}, "
      f"pseudo-cost {run.pseudo:.2f}, monitor violations {len(run.violations)}")
last = run.records[-1]
print("final class split:", [round(v, 3) for v in last["x"]])
print("final potentials:", {k: round(v, 3) for k, v in last["potentials"].items()})

# How does the ratio move as the number of classes grows?
for ell in (2, 4, 8):
    cfg = ExperimentConfig(GeneratorSpec(family="mixed", ell=ell, k=4, n=8, T=300), [0, 1],
                           ["det", "wimp"])
    for key, stats in report_summary(run_experiment(cfg)).items():
        print(f"l={ell} {key}: max ratio {stats['max_ratio']:.3f}, "
              f"max ratio vs canonical optimum {stats['max_canon_ratio']:.3f}")
