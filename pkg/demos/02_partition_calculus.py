"""The exchangeable partition view of a mixture with a random component
count: the V_n coefficients turn the hierarchical prior into a closed-form
law over set partitions, which we verify by exhaustive enumeration.
"""

import math

import numpy as np

from rgmix import (
    KPrior,
    compute_vn_table,
    enumerate_set_partitions,
    log_partition_prior,
    sample_k_given_partition,
)

prior = KPrior(intensity=1.0)  # zero-truncated Poisson, lambda = 1
n, beta = 5, 1.0
table = compute_vn_table(n, beta, prior, ell_max=n)
print("log V_n(l) for l=1..5:", [round(v, 4) for v in table.log_vn])

parts = enumerate_set_partitions(n)
probs = [math.exp(log_partition_prior(p, table, beta)) for p in parts]
print(f"\n{len(parts)} set partitions of 5 items; prior mass sums to {sum(probs):.10f}")

by_ell = {}
for part, pr in zip(parts, probs):
    by_ell[part.ell] = by_ell.get(part.ell, 0.0) + pr
print("prior over the number of occupied clusters:", {k: round(v, 4) for k, v in sorted(by_ell.items())})

# conditional draw of the component count given an observed partition:
# K can exceed the occupied count because components may sit empty
rng = np.random.default_rng(1)
draws = [sample_k_given_partition(ell=2, n=5, m=3, rng=rng) for _ in range(20_000)]
vals, counts = np.unique(draws, return_counts=True)
print("\nK | partition with 2 clusters:", dict(zip(vals.tolist(), (counts / len(draws)).round(4).tolist())))
