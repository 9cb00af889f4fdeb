#!/usr/bin/env python3
"""Walkthrough of the lazy online policy.

At each slot the policy recomputes a band [lower, upper] of states that
some offline optimum could occupy right now, then moves only if its
current state fell outside the band.  Walking the bands backwards from
the end of the horizon reconstructs an offline-optimal reference, so the
competitive ratio is measurable after the fact.
"""

import numpy as np

from rightsizing import (
    TableCost,
    ProblemInstance,
    backward_optimal,
    dp_optimal,
    eval_cost,
    lcp_run,
)

rng = np.random.default_rng(21)

# A choppy workload on 8 servers: bursts arrive before the policy has
# fully paid off the previous move.
T, m = 24, 8
demand = np.array([1, 1, 1, 6, 6, 1, 1, 6, 6, 6, 2, 2,
                   7, 7, 2, 2, 2, 7, 7, 7, 1, 1, 1, 1])
fns = tuple(TableCost([0.6 * abs(x - d) for x in range(m + 1)]) for d in demand)
inst = ProblemInstance(T, m, beta=4.0, functions=fns)

trace = lcp_run(inst)
ref = backward_optimal(trace.decisions)

print("slot  demand  band        policy  reference")
for t, (d, dec, r) in enumerate(zip(demand, trace.decisions, ref), start=1):
    print(f"{t:4d}  {d:6d}  [{dec.lower}, {dec.upper}]{'':6s}{dec.chosen:4d}  {r:9d}")

opt = dp_optimal(inst)
ref_cost = eval_cost(inst, ref).total
print(f"\npolicy cost    {trace.cost.total:8.2f}")
print(f"reference cost {ref_cost:8.2f} (equals DP optimum {opt.cost:.2f})")
print(f"ratio          {trace.cost.total / opt.cost:8.3f}  "
      f"(laziness costs something here, but never more than 3x)")

# The reference always threads through the bands: lower <= ref <= upper.
ok = all(d.lower <= r <= d.upper for d, r in zip(trace.decisions, ref))
print(f"reference inside every band: {ok}")
