"""Shared test helpers."""

import numpy as np

from sparseattn.matrices import SparseStochasticMatrix


def random_causal_matrix(L, k, gamma, seed):
    """Random valid lower-triangular target matrix.

    The greedy sampler dead-ends almost surely on causal support beyond tiny
    L (low-index rows get starved), so causal tests build instances
    directly: every diagonal cell is filled (guaranteeing causality, row
    coverage, and column bound headroom tracking), then random below-diagonal
    cells are added while the per-row/per-column budgets allow.  Values are
    1 or gamma by coin flip, rows normalized.  For k=1 this yields the
    identity, which is the only valid causal support at k=1.
    """
    rng = np.random.default_rng(seed)
    row_counts = np.ones(L, dtype=np.int64)
    col_counts = np.ones(L, dtype=np.int64)
    cells = [(i, i) for i in range(L)]
    below = [(i, j) for i in range(L) for j in range(i)]
    rng.shuffle(below)
    for i, j in below:
        if row_counts[i] < k and col_counts[j] < k:
            cells.append((i, j))
            row_counts[i] += 1
            col_counts[j] += 1
    rows = np.array([c[0] for c in cells], dtype=np.int64)
    cols = np.array([c[1] for c in cells], dtype=np.int64)
    vals = np.where(rng.integers(0, 2, size=len(cells)) == 1, gamma, 1.0)
    sums = np.zeros(L)
    np.add.at(sums, rows, vals)
    vals = vals / sums[rows]
    return SparseStochasticMatrix(L, rows, cols, vals, causal=True, k=k, gamma=gamma)
