"""Exact solving on a batch of random instances, cross-checked against the
exhaustive oracle, with the effect of the reduction rules on the tree size."""

import numpy as np

from alwabp import INFEASIBLE, BnbConfig, branch_and_bound, brute_force_optimal, generate_instance

rng = np.random.Generator(np.random.PCG64(5))

print(f"{'instance':<12} {'oracle':>6} {'search':>6} {'status':>10} {'nodes':>6} {'nodes (no rules)':>16}")
for seed in range(8):
    base = [int(rng.integers(1, 12)) for _ in range(8)]
    edges = {(i, j) for i in range(8) for j in range(i + 1, 8) if rng.random() < 0.25}
    inst = generate_instance(base, edges, 3, "high", 0.15, seed=seed)

    oracle = brute_force_optimal(inst)
    if oracle == INFEASIBLE:
        print(f"seed {seed:<7} infeasible")
        continue
    with_rules = branch_and_bound(inst, BnbConfig(seed=seed))
    without = branch_and_bound(inst, BnbConfig(seed=seed, reduction_rules=False))
    assert with_rules.value == without.value == oracle
    print(
        f"seed {seed:<7} {oracle:>6} {with_rules.value:>6} {with_rules.status:>10}"
        f" {with_rules.nodes:>6} {without.nodes:>16}"
    )
