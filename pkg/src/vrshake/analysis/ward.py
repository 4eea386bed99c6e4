"""Agglomerative minimum-variance clustering.

Merge cost between clusters is the increase in total within-cluster sum of
squared distances to the centroid caused by merging them; for singletons x, y
that is ||x - y||^2 / 2.  Costs are maintained with the Lance-Williams
recurrence

    W(k, i+j) = [(ni+nk) W(k,i) + (nj+nk) W(k,j) - nk W(i,j)] / (ni+nj+nk)

which reproduces the cost increase exactly, so merge heights are the true
cost deltas and are non-decreasing.

Cluster ids: inputs are 0..n-1, the cluster created by merge step s (0-based)
gets id n+s.  When several pairs share the minimal cost, the pair with the
lexicographically smallest (left, right) id wins.  Cut labels are numbered by
each cluster's smallest member index, ascending.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import InvalidInputError


@dataclass(frozen=True)
class Merge:
    left: int      # smaller cluster id
    right: int     # larger cluster id
    height: float  # cost increase for this merge
    size: int      # members in the new cluster


@dataclass(frozen=True)
class Dendrogram:
    n: int
    merges: tuple[Merge, ...]


def ward_linkage(points) -> Dendrogram:
    X = np.asarray(points, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise InvalidInputError("ward_linkage needs a 2-D array with at least 1 row")
    n = X.shape[0]
    if n == 1:
        return Dendrogram(n=1, merges=())

    total = 2 * n - 1
    # Pairwise merge costs between active clusters, +inf elsewhere; only the
    # upper triangle (left < right) is consulted.
    cost = np.full((total, total), np.inf)
    diff = X[:, None, :] - X[None, :, :]
    cost[:n, :n] = 0.5 * np.einsum("ijk,ijk->ij", diff, diff)
    idx = np.arange(n)
    cost[idx, idx] = np.inf
    cost[np.tril_indices(n, -1)] = np.inf

    size = np.zeros(total, dtype=np.int64)
    size[:n] = 1
    active = np.zeros(total, dtype=bool)
    active[:n] = True

    merges = []
    for step in range(n - 1):
        flat = int(np.argmin(cost))        # row-major: first minimum is the
        i, j = divmod(flat, total)         # lexicographically smallest (i, j)
        height = float(cost[i, j])
        new = n + step

        others = np.flatnonzero(active)
        others = others[(others != i) & (others != j)]
        ni, nj, nk = size[i], size[j], size[others]
        merged = ((ni + nk) * cost[np.minimum(i, others), np.maximum(i, others)]
                  + (nj + nk) * cost[np.minimum(j, others), np.maximum(j, others)]
                  - nk * height) / (ni + nj + nk)
        cost[others, new] = merged          # new > every other id, upper triangle

        cost[i, :] = np.inf
        cost[:, i] = np.inf
        cost[j, :] = np.inf
        cost[:, j] = np.inf
        active[i] = active[j] = False
        active[new] = True
        size[new] = ni + nj
        merges.append(Merge(left=i, right=j, height=height, size=int(size[new])))

    return Dendrogram(n=n, merges=tuple(merges))


def cut(dendrogram: Dendrogram, k: int) -> list[int]:
    """Labels (0..k-1) after stopping at k clusters.

    Label order follows each cluster's smallest member index.
    """
    n = dendrogram.n
    if not 1 <= k <= n:
        raise InvalidInputError(f"k must be in [1, {n}]")
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    for step in range(n - k):
        merge = dendrogram.merges[step]
        members[n + step] = members.pop(merge.left) + members.pop(merge.right)
    labels = [0] * n
    for label, group in enumerate(sorted(members.values(), key=min)):
        for member in group:
            labels[member] = label
    return labels
