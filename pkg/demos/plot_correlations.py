"""
Pearson and Spearman on tied data
=================================

Spearman's coefficient is Pearson's applied to ranks; tied values share the
average of the ranks they span.
"""

import numpy as np

from rsa_refgame.analysis import average_ranks, histogram, pearson, spearman

x = np.array([0.1, 0.4, 0.4, 0.4, 0.9, 2.0])
y = np.array([1.0, 2.0, 2.5, 2.5, 7.0, 50.0])
print("ranks of x:", average_ranks(x))
print(f"PCC  {pearson(x, y):.4f}")
print(f"SRCC {spearman(x, y):.4f}")

# %%
# A constant vector has no correlation at all, not zero.
print(pearson([1, 1, 1], [1, 2, 3]))

# %%
# Group-level coefficients are binned into 40 bins over [-1, 1].
rng = np.random.default_rng(0)
values = np.clip(rng.normal(0.3, 0.4, 200), -1, 1)
counts, edges = histogram(values)
for c, lo in zip(counts, edges):
    if c:
        print(f"{lo:+.2f} {'#' * c}")
