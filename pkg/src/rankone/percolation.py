"""Bond percolation on a box with long-range shortcuts, G_N(p, c).

Sites of ``B(N) = {-N..N}^d`` are joined by open nearest-neighbour bonds
(probability ``p`` each, free boundary) and by long-range edges between any
two sites (probability ``c / |B(N)|`` each).  Collapsing every open cluster
to a macro-vertex of type ``|cluster|`` and activity ``|cluster|`` turns the
model into a rank-1 graph; the largest component of G_N(p, c) equals the
largest macro-component activity.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import OutOfRange
from .graph import _class_pairs
from .model import DEFAULT_TAIL_TOL, TypeSpace, build_space, geometric, truncate_family
from .rng import as_generator
from .theory import alpha_of_c
from .unionfind import UnionFind


@dataclass(frozen=True)
class LatticeSpec:
    d: int
    N: int
    p: float

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise OutOfRange(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.N < 0:
            raise OutOfRange(f"box radius must be >= 0, got {self.N}")
        if not 0 <= self.p < 1:
            raise OutOfRange(f"bond probability must lie in [0, 1), got {self.p}")

    @property
    def side(self) -> int:
        return 2 * self.N + 1

    @property
    def box_size(self) -> int:
        return self.side**self.d


@dataclass(frozen=True, eq=False)
class ClusterSet:
    cluster_of: np.ndarray  # site -> cluster id
    sizes: np.ndarray  # cluster id -> size
    k_n: int

    @property
    def box_size(self) -> int:
        return int(self.cluster_of.shape[0])


@dataclass(frozen=True)
class MacroLaw:
    mu_hat: dict  # cluster size -> frequency among clusters
    inv_c_mean: float
    c_mean: float
    counts: dict  # cluster size -> number of clusters

    def to_space(self) -> TypeSpace:
        """Macro-vertex type space: type ``k`` with weight ``mu_hat(k)`` and activity ``k``."""
        return build_space([(k, n, k) for k, n in sorted(self.counts.items())], name="macro-empirical")


@dataclass(frozen=True)
class OneDLaw:
    """Exact open-cluster law on the line for bond density ``p``."""

    p: float

    def __post_init__(self):
        if not 0 <= self.p < 1:
            raise OutOfRange(f"p must lie in [0, 1), got {self.p}")

    def cluster_pmf(self, k: int) -> float:
        """``P(|C| = k) = k p^(k-1) (1-p)^2``."""
        return k * self.p ** (k - 1) * (1 - self.p) ** 2

    def macro_pmf(self, k: int) -> float:
        """``mu(k) = P(|C| = k) / (k E 1/|C|) = p^(k-1) (1-p)``."""
        return self.p ** (k - 1) * (1 - self.p)

    @property
    def c_mean(self) -> float:
        return (1 + self.p) / (1 - self.p)

    @property
    def inv_c_mean(self) -> float:
        return 1 - self.p

    def to_space(self, tail_tol: float = DEFAULT_TAIL_TOL) -> TypeSpace:
        return truncate_family(geometric(1 - self.p, "identity"), tail_tol)


@dataclass(frozen=True)
class HybridSample:
    c1_combined: int
    c1_macro_activity: int
    long_edge_count: int
    k_n: int
    box_size: int


def one_d_cluster_law(p: float) -> OneDLaw:
    return OneDLaw(p)


def _open_bonds(lattice: LatticeSpec, rng) -> tuple[np.ndarray, np.ndarray]:
    side, d = lattice.side, lattice.d
    sites = np.arange(lattice.box_size, dtype=np.int64).reshape((side,) * d)
    us, vs = [], []
    for axis in range(d):
        stride = side ** (d - 1 - axis)
        u = np.take(sites, np.arange(side - 1), axis=axis).ravel()
        keep = rng.random(u.shape[0]) < lattice.p
        u = u[keep]
        us.append(u)
        vs.append(u + stride)
    return np.concatenate(us), np.concatenate(vs)


def _clusters_from_bonds(lattice, u, v) -> ClusterSet:
    uf = UnionFind(lattice.box_size)
    uf.union_edges(u, v)
    labels, k = uf.labels()
    return ClusterSet(labels, np.bincount(labels, minlength=k), int(k))


def sample_clusters(lattice: LatticeSpec, rng=None) -> ClusterSet:
    """Open clusters of nearest-neighbour bond percolation on the box."""
    rng = as_generator(rng)
    u, v = _open_bonds(lattice, rng)
    return _clusters_from_bonds(lattice, u, v)


def empirical_macro_law(clusters: ClusterSet) -> MacroLaw:
    if clusters.k_n == 0:
        raise OutOfRange("empty cluster set")
    size_counts = np.bincount(clusters.sizes)
    ks = np.flatnonzero(size_counts)
    counts = {int(k): int(size_counts[k]) for k in ks}
    box = clusters.box_size
    return MacroLaw(
        mu_hat={k: n / clusters.k_n for k, n in counts.items()},
        inv_c_mean=clusters.k_n / box,
        c_mean=math.fsum(k * k * n for k, n in counts.items()) / box,
        counts=counts,
    )


def sample_hybrid(lattice: LatticeSpec, c: float, rng=None) -> HybridSample:
    """One draw of G_N(p, c) viewed both on sites and on macro-vertices."""
    if not c > 0:
        raise OutOfRange(f"c must be positive, got {c}")
    rng = as_generator(rng)
    box = lattice.box_size
    su, sv = _open_bonds(lattice, rng)
    clusters = _clusters_from_bonds(lattice, su, sv)
    long_edges = _class_pairs(rng, np.arange(box, dtype=np.int64), None, c / box)

    # site view: short and long edges together
    uf = UnionFind(box)
    uf.union_edges(su, sv)
    uf.union_edges(long_edges[:, 0], long_edges[:, 1])
    labels, _ = uf.labels()
    c1_sites = int(np.bincount(labels).max())

    # macro view: clusters joined by the projected long edges
    mu_, mv_ = clusters.cluster_of[long_edges[:, 0]], clusters.cluster_of[long_edges[:, 1]]
    loops = mu_ == mv_
    muf = UnionFind(clusters.k_n)
    muf.union_edges(mu_[~loops], mv_[~loops])
    mlabels, _ = muf.labels()
    c1_macro = int(np.bincount(mlabels, weights=clusters.sizes).max())

    return HybridSample(
        c1_combined=c1_sites,
        c1_macro_activity=c1_macro,
        long_edge_count=int(long_edges.shape[0]),
        k_n=clusters.k_n,
        box_size=box,
    )


def gamma(law: Union[MacroLaw, OneDLaw], c: float, tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    """Decay constant ``gamma(p, c) = alpha(c E 1/|C|)`` with ``psi(k) = k``.

    Equal to one once ``c >= 1 / E|C|``.
    """
    if not c > 0:
        raise OutOfRange(f"c must be positive, got {c}")
    if c * law.c_mean >= 1:
        return 1.0
    space = law.to_space(tail_tol) if isinstance(law, OneDLaw) else law.to_space()
    return alpha_of_c(space, c * law.inv_c_mean)
