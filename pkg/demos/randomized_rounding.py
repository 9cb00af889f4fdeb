#!/usr/bin/env python3
"""Walkthrough of randomized rounding.

A fractional schedule is turned into a random integer schedule that stays
on the floor/ceiling of each slot.  The transition probabilities are
chosen so that the chance of sitting on the ceiling equals the fractional
part, which makes the expected operating and switching costs match the
fractional schedule's costs exactly.
"""

import numpy as np

from rightsizing import (
    AffineAbsCost,
    ProblemInstance,
    extend_continuous,
    rounding_ensemble,
    rounding_run,
)

rng = np.random.default_rng(5)

T, m = 40, 3
inst = ProblemInstance(
    T, m, beta=1.0,
    functions=tuple(AffineAbsCost(float(e), float(c)) for e, c in
                    zip(rng.uniform(0.2, 1.5, T), rng.uniform(0, m, T))),
)

# Any fractional schedule works; here, a smooth random walk in [0, 3].
walk = np.clip(np.cumsum(rng.uniform(-0.6, 0.6, T)) + 1.5, 0.05, m - 0.05)

one = rounding_run(walk, inst, seed=1)
print("one realization (fractional -> integer):")
for t in range(0, T, 8):
    print(f"  slot {t + 1:2d}: {walk[t]:5.2f} -> {one.schedule[t]}")
print(f"this run's cost {one.cost.total:.3f} "
      f"vs fractional cost {one.fractional_cost.total:.3f}\n")

# Across many runs the ceiling frequency tracks the fractional part...
n = 50_000
ens = rounding_ensemble(walk, inst, n, seed=2)
frac = np.mod(walk, 1.0)
worst = np.abs(ens.upper_frequency - frac).max()
print(f"{n} runs: worst |ceil-frequency - fractional part| = {worst:.4f}")

# ...and the mean cost reproduces the fractional cost.
target = extend_continuous(inst).cost(walk).total
mean = ens.costs.mean()
print(f"mean cost {mean:.3f} vs fractional cost {target:.3f} "
      f"({100 * abs(mean - target) / target:.3f}% off)")

# The support never leaves the floor/ceiling pair of each slot.
lo, hi = np.floor(walk), np.ceil(walk)
res = rounding_run(walk, inst, seed=3)
print(f"support law holds: {bool(np.all((res.schedule == lo) | (res.schedule == hi)))}")
