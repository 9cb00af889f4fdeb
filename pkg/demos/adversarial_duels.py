#!/usr/bin/env python3
"""Walkthrough of the lower-bound adversaries.

Each adversary streams V-shaped costs that punish whatever the policy
just did, on one or two servers with a state change costing exactly 1.
Against the lazy deterministic policy the measured ratio approaches 3;
against the fractional stepping policy (and its rounding) it approaches
2, matching the policies' worst-case guarantees from the other side.
"""

from rightsizing import (
    TOWARD_ONE,
    TOWARD_ZERO,
    AdversaryConfig,
    AlgorithmB,
    run_duel,
    run_scripted_workload,
)

print("deterministic duel: alternating pulls against the lazy policy")
for eps in (0.1, 0.02, 0.01):
    rep = run_duel("lcp", AdversaryConfig(eps=eps, variant="discrete"))
    print(f"  eps={eps:<5}  T={rep.T:<6}  ratio={rep.ratio:.4f}  "
          f"(optimum {rep.opt_cost:.1f} <= bound {rep.opt_bound:.1f})")
print("  -> climbs toward 3 as eps shrinks and T grows\n")

print("fractional duel: the stepping policy walks into the boundary")
for eps in (0.1, 0.01):
    rep = run_duel("algorithm-b", AdversaryConfig(eps=eps, variant="continuous"))
    print(f"  eps={eps:<5}  terminated {rep.termination} after {rep.T} slots, "
          f"ratio={rep.ratio:.6f} = 2 - eps/2")

# The other boundary is reachable with a scripted workload: push the
# policy halfway up, then all the way back down.
eps = 0.01
labels = [TOWARD_ONE] * 150 + [TOWARD_ZERO] * 150
rep = run_scripted_workload(AlgorithmB(eps), labels, eps)
print(f"  scripted down-leg: terminated {rep.termination}, "
      f"ratio={rep.ratio:.6f} = 2 - eps/2\n")

print("randomized duel: rounding over the stepping policy, mean of many runs")
rep = run_duel("random-round", AdversaryConfig(eps=0.01, variant="randomized",
                                               T=10_000, n_runs=400, seed=11))
print(f"  mean cost {rep.policy_cost:.2f} ~ fractional cost "
      f"{rep.fractional_cost:.2f}; mean ratio {rep.ratio:.4f} in [1.9, 2.0]\n")

print("load-model duel: same workload expressed as loads on two servers")
rep = run_duel("lcp", AdversaryConfig(eps=0.01, variant="restricted"))
corrected = (rep.policy_cost - rep.beta) / (rep.opt_cost - rep.beta)
print(f"  per-slot cost identity deviation: {rep.embedding_max_dev:.1e}")
print(f"  ratio after removing the one-time boundary cost: {corrected:.6f}")
print(f"  two-level duel ratio:                            {rep.general_ratio:.6f}")
