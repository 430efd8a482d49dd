"""Disjoint-set forest over contiguous integer vertices.

The kernels are compiled with numba; graphs at n = 10^6 make a pure Python
forest the bottleneck of every experiment.  Union by size, path halving.
"""

import numba
import numpy as np


@numba.njit(cache=True)
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@numba.njit(cache=True)
def _union_all(parent, size, u, v):
    for i in range(u.shape[0]):
        a = _find(parent, u[i])
        b = _find(parent, v[i])
        if a == b:
            continue
        if size[a] < size[b]:
            a, b = b, a
        parent[b] = a
        size[a] += size[b]


@numba.njit(cache=True)
def _compact_labels(parent):
    # label components 0..k-1 in order of their smallest vertex
    n = parent.shape[0]
    label = np.empty(n, np.int64)
    root_label = np.full(n, -1, np.int64)
    k = 0
    for x in range(n):
        r = _find(parent, x)
        if root_label[r] < 0:
            root_label[r] = k
            k += 1
        label[x] = root_label[r]
    return label, k


class UnionFind:
    """Disjoint sets on ``{0, ..., n-1}``.

    >>> uf = UnionFind(5)
    >>> uf.union_edges([0, 3], [1, 4])
    >>> uf.labels()[0].tolist()
    [0, 0, 1, 2, 2]
    """

    def __init__(self, n):
        self.parent = np.arange(n, dtype=np.int64)
        self.size = np.ones(n, dtype=np.int64)

    def __len__(self):
        return self.parent.shape[0]

    def find(self, x):
        return int(_find(self.parent, x))

    def union(self, a, b):
        self.union_edges([a], [b])

    def union_edges(self, u, v):
        u = np.ascontiguousarray(u, dtype=np.int64)
        v = np.ascontiguousarray(v, dtype=np.int64)
        if u.shape != v.shape:
            raise ValueError("endpoint arrays differ in length")
        _union_all(self.parent, self.size, u, v)

    def labels(self):
        """``(labels, k)``: compact component ids ordered by smallest member."""
        return _compact_labels(self.parent)


def connected_labels(n, u, v):
    uf = UnionFind(n)
    uf.union_edges(u, v)
    return uf.labels()
