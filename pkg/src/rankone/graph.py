"""Sampling the rank-1 inhomogeneous random graph and its components.

Vertices ``0..n-1`` carry atom indices of a :class:`TypeSpace`.  Vertices
``i`` and ``j`` are joined independently with probability
``min(c psi_i psi_j / n, 1)``.

Two samplers are provided.  ``naive`` flips one coin per vertex pair and is
only meant for small ``n``.  ``grouped`` uses the rank-1 structure: all pairs
between type classes ``k`` and ``l`` share one probability, so the number of
edges between the classes is a single binomial draw, and the edges
themselves are a uniform subset of the class-pair grid.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .errors import OutOfRange
from .model import TypeSpace
from .rng import as_generator
from .unionfind import connected_labels

# below this many candidate pairs the grid is enumerated explicitly
_ENUMERATE_LIMIT = 4_000_000


@dataclass(frozen=True, eq=False)
class TypedGraph:
    n: int
    type_of: np.ndarray  # atom index per vertex
    edges: np.ndarray  # shape (m, 2), u < v

    @property
    def m(self) -> int:
        return int(self.edges.shape[0])

    def to_bytes(self) -> bytes:
        return (
            np.int64(self.n).tobytes()
            + np.ascontiguousarray(self.type_of, dtype=np.int64).tobytes()
            + np.ascontiguousarray(self.edges, dtype=np.int64).tobytes()
        )


@dataclass(frozen=True, eq=False)
class ComponentStats:
    """Component sizes and activities, both sorted in decreasing order."""

    component_count: int
    sizes: np.ndarray
    activities: np.ndarray
    c1: int
    max_activity: float

    def same_as(self, other: "ComponentStats") -> bool:
        return (
            self.component_count == other.component_count
            and self.c1 == other.c1
            and self.max_activity == other.max_activity
            and np.array_equal(self.sizes, other.sizes)
            and np.array_equal(self.activities, other.activities)
        )


# ---------------------------------------------------------------------------
# Types


def sample_types(space: TypeSpace, n: int, mode: str = "iid", rng=None) -> np.ndarray:
    """Atom index for each of ``n`` vertices.

    ``iid`` draws every type from ``mu``.  ``quota`` gives atom ``k`` exactly
    ``floor(n mu_k)`` vertices, hands the leftovers to the largest
    remainders, and shuffles.
    """
    if n < 1:
        raise OutOfRange(f"n must be >= 1, got {n}")
    rng = as_generator(rng)
    k = len(space)
    if k == 1:
        return np.zeros(n, dtype=np.int64)
    if mode == "iid":
        return rng.choice(k, size=n, p=space.weights).astype(np.int64)
    if mode == "quota":
        exact = n * space.weights
        counts = np.floor(exact).astype(np.int64)
        short = n - int(counts.sum())
        # ties broken by atom order (stable sort)
        order = np.argsort(-(exact - counts), kind="stable")
        counts[order[:short]] += 1
        types = np.repeat(np.arange(k, dtype=np.int64), counts)
        return rng.permutation(types)
    raise OutOfRange(f"unknown type sampling mode {mode!r}")


# ---------------------------------------------------------------------------
# Edges


def _pick_distinct(rng, total: int, m: int) -> np.ndarray:
    """``m`` distinct uniform keys from ``range(total)`` (sparse case).

    Keeps the first ``m`` distinct values of an iid uniform sequence, which
    is a uniform ``m``-subset.
    """
    keys = rng.integers(0, total, size=m)
    uniq, first = np.unique(keys, return_index=True)
    while uniq.shape[0] < m:
        extra = rng.integers(0, total, size=m - uniq.shape[0])
        keys = np.concatenate([keys[np.sort(first)], extra])
        uniq, first = np.unique(keys, return_index=True)
    return keys[np.sort(first)[:m]]


def _class_pairs(rng, a: np.ndarray, b: np.ndarray | None, prob: float):
    """Random edge set between vertex classes ``a`` and ``b`` (``None``: within ``a``)."""
    na = a.shape[0]
    if b is None:
        total = na * (na - 1) // 2
    else:
        total = na * b.shape[0]
    if total == 0 or prob <= 0:
        return np.empty((0, 2), dtype=np.int64)
    m = int(rng.binomial(total, prob)) if prob < 1 else total
    if m == 0:
        return np.empty((0, 2), dtype=np.int64)
    if b is None:
        if total <= _ENUMERATE_LIMIT:
            iu, ju = np.triu_indices(na, 1)
            pick = rng.choice(total, size=m, replace=False) if m < total else np.arange(total)
            i, j = iu[pick], ju[pick]
        else:
            # ordered pair (i, j), i != j, folded onto the unordered pair
            i = rng.integers(0, na, size=m)
            j = rng.integers(0, na - 1, size=m)
            j = np.where(j >= i, j + 1, j)
            lo, hi = np.minimum(i, j), np.maximum(i, j)
            keys = lo * na + hi
            uniq, first = np.unique(keys, return_index=True)
            while uniq.shape[0] < m:
                need = m - uniq.shape[0]
                i2 = rng.integers(0, na, size=need)
                j2 = rng.integers(0, na - 1, size=need)
                j2 = np.where(j2 >= i2, j2 + 1, j2)
                keys = np.concatenate(
                    [keys[np.sort(first)], np.minimum(i2, j2) * na + np.maximum(i2, j2)]
                )
                uniq, first = np.unique(keys, return_index=True)
            keys = keys[np.sort(first)[:m]]
            i, j = keys // na, keys % na
        u, v = a[i], a[j]
    else:
        nb = b.shape[0]
        if total <= _ENUMERATE_LIMIT:
            keys = rng.choice(total, size=m, replace=False) if m < total else np.arange(total)
        else:
            keys = _pick_distinct(rng, total, m)
        u, v = a[keys // nb], b[keys % nb]
    return np.stack([np.minimum(u, v), np.maximum(u, v)], axis=1)


def sample_graph(
    space: TypeSpace, c: float, types: np.ndarray, method: str = "grouped", rng=None
) -> TypedGraph:
    """Sample ``G(n, kappa)`` given vertex types; ``c = 0`` yields the empty graph."""
    if c < 0:
        raise OutOfRange(f"c must be nonnegative, got {c}")
    rng = as_generator(rng)
    types = np.asarray(types, dtype=np.int64)
    n = int(types.shape[0])
    if types.size and (types.min() < 0 or types.max() >= len(space)):
        raise OutOfRange("type index outside the type space")
    psi = space.psi
    if method == "naive":
        iu, ju = np.triu_indices(n, 1)
        prob = np.minimum(c * psi[types[iu]] * psi[types[ju]] / n, 1.0)
        keep = rng.random(iu.shape[0]) < prob
        edges = np.stack([iu[keep], ju[keep]], axis=1).astype(np.int64)
        return TypedGraph(n, types, edges)
    if method != "grouped":
        raise OutOfRange(f"unknown sampling method {method!r}")
    classes = [np.flatnonzero(types == k) for k in range(len(space))]
    blocks = []
    for k in range(len(space)):
        for l in range(k, len(space)):
            prob = min(c * psi[k] * psi[l] / n, 1.0)
            blocks.append(_class_pairs(rng, classes[k], None if k == l else classes[l], prob))
    edges = np.concatenate(blocks) if blocks else np.empty((0, 2), dtype=np.int64)
    return TypedGraph(n, types, edges.astype(np.int64))


def sample_model_graph(space: TypeSpace, c: float, n: int, mode="iid", method="grouped", rng=None):
    rng = as_generator(rng)
    types = sample_types(space, n, mode, rng)
    return sample_graph(space, c, types, method, rng)


# ---------------------------------------------------------------------------
# Components


def _stats_from_labels(labels, k, vertex_psi) -> ComponentStats:
    sizes = np.bincount(labels, minlength=k)
    acts = np.bincount(labels, weights=vertex_psi, minlength=k)
    sizes = np.sort(sizes)[::-1]
    acts = np.sort(acts)[::-1]
    return ComponentStats(
        component_count=int(k),
        sizes=sizes,
        activities=acts,
        c1=int(sizes[0]) if k else 0,
        max_activity=float(acts[0]) if k else 0.0,
    )


def components(graph: TypedGraph, space: TypeSpace, method: str = "dsu") -> ComponentStats:
    """Connected components by disjoint-set union (``bfs`` runs the reference search)."""
    if method == "bfs":
        return components_bfs(graph, space)
    labels, k = connected_labels(graph.n, graph.edges[:, 0], graph.edges[:, 1])
    return _stats_from_labels(labels, k, space.psi[graph.type_of])


def components_bfs(graph: TypedGraph, space: TypeSpace) -> ComponentStats:
    """Breadth-first component revealing; slow, used as the reference."""
    adj = [[] for _ in range(graph.n)]
    for u, v in graph.edges.tolist():
        adj[u].append(v)
        adj[v].append(u)
    psi = space.psi[graph.type_of].tolist()
    seen = [False] * graph.n
    sizes, acts = [], []
    for root in range(graph.n):
        if seen[root]:
            continue
        seen[root] = True
        queue = deque([root])
        members = []
        while queue:
            x = queue.popleft()
            members.append(x)
            for y in adj[x]:
                if not seen[y]:
                    seen[y] = True
                    queue.append(y)
        members.sort()
        sizes.append(len(members))
        total = 0.0
        for x in members:
            total += psi[x]
        acts.append(total)
    sizes_arr = np.sort(np.array(sizes, dtype=np.int64))[::-1]
    acts_arr = np.sort(np.array(acts, dtype=float))[::-1]
    return ComponentStats(
        component_count=len(sizes),
        sizes=sizes_arr,
        activities=acts_arr,
        c1=int(sizes_arr[0]) if sizes else 0,
        max_activity=float(acts_arr[0]) if sizes else 0.0,
    )


# ---------------------------------------------------------------------------
# Edge-list dump


def write_edgelist(graph: TypedGraph, fh: TextIO) -> None:
    fh.write(f"{graph.n} {graph.m}\n")
    for u, v in graph.edges.tolist():
        fh.write(f"{u} {v}\n")


def read_edgelist(fh: TextIO) -> tuple[int, np.ndarray]:
    n, m = (int(t) for t in fh.readline().split())
    edges = np.loadtxt(fh, dtype=np.int64, ndmin=2) if m else np.empty((0, 2), dtype=np.int64)
    if edges.shape[0] != m:
        raise ValueError(f"header announces {m} edges, found {edges.shape[0]}")
    return n, edges.reshape(-1, 2)
