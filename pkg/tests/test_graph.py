import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from rankone.graph import (
    TypedGraph,
    components,
    components_bfs,
    read_edgelist,
    sample_graph,
    sample_model_graph,
    sample_types,
    write_edgelist,
)
from rankone.model import build_space, homogeneous, two_type
from rankone.rng import derive_stream
from rankone.unionfind import UnionFind

HOM = homogeneous()
TWO = two_type()


def _assert_simple(g: TypedGraph):
    e = g.edges
    assert np.all(e[:, 0] < e[:, 1])
    assert np.unique(e[:, 0] * g.n + e[:, 1]).shape[0] == e.shape[0]
    assert e.size == 0 or (e.min() >= 0 and e.max() < g.n)


# -- types ------------------------------------------------------------------


def test_single_atom_types():
    assert np.all(sample_types(HOM, 17, "iid", 0) == 0)
    assert np.all(sample_types(HOM, 17, "quota", 0) == 0)


def test_quota_exact():
    t = sample_types(TWO, 10, "quota", 0)
    assert np.bincount(t).tolist() == [5, 5]
    t = sample_types(build_space([(1, 1, 1), (2, 1, 1), (3, 1, 1)]), 10, "quota", 0)
    assert sorted(np.bincount(t).tolist()) == [3, 3, 4]


def test_iid_frequency():
    n = 100_000
    t = sample_types(TWO, n, "iid", 1)
    assert abs(np.mean(t == 0) - 0.5) <= 4 * math.sqrt(0.25 / n)


# -- edges ------------------------------------------------------------------


def test_empty_graph_at_c_zero():
    g = sample_model_graph(TWO, 0.0, 50, rng=0)
    assert g.m == 0
    assert components(g, TWO).c1 == 1


def test_clamped_probability():
    sp = build_space([(1, 1.0, 3.0)])  # c psi psi = 9 >= n = 2
    for seed in range(20):
        for method in ("grouped", "naive"):
            g = sample_graph(sp, 1.0, np.zeros(2, dtype=int), method, seed)
            assert g.edges.tolist() == [[0, 1]]


def test_edge_count_homogeneous():
    n, c = 10_000, 0.5
    pairs = n * (n - 1) // 2
    mean = pairs * c / n
    sd = math.sqrt(pairs * (c / n) * (1 - c / n))
    assert mean == pytest.approx(2499.75)
    g = sample_model_graph(HOM, c, n, rng=4)
    _assert_simple(g)
    assert abs(g.m - mean) <= 4 * sd


def test_large_sparse_graph_is_simple():
    # the rejection path (class grids beyond the enumeration limit)
    g = sample_model_graph(TWO, 3.0, 20_000, rng=8)
    _assert_simple(g)
    assert g.m > 0


def test_grouped_and_naive_agree():
    n, reps = 64, 10_000
    types = sample_types(TWO, n, "quota", 0)
    counts = {m: np.zeros((reps, 3)) for m in ("grouped", "naive")}
    degrees = {m: np.zeros(8, dtype=np.int64) for m in counts}
    for method in counts:
        for i in range(reps):
            g = sample_graph(TWO, 2.0, types, method, derive_stream(123, method, i))
            tu, tv = types[g.edges[:, 0]], types[g.edges[:, 1]]
            counts[method][i] = [np.sum(tu + tv == 0), np.sum(tu != tv), np.sum(tu + tv == 2)]
            deg = np.bincount(g.edges.ravel(), minlength=n)
            degrees[method] += np.bincount(np.minimum(deg, 7), minlength=8)
    a, b = counts["grouped"], counts["naive"]
    se = np.sqrt(a.var(axis=0, ddof=1) / reps + b.var(axis=0, ddof=1) / reps)
    assert np.all(np.abs(a.mean(axis=0) - b.mean(axis=0)) <= 4 * se)
    table = np.array([degrees["grouped"], degrees["naive"]])
    table = table[:, table.sum(axis=0) > 0]
    assert stats.chi2_contingency(table)[1] > 1e-3


def test_sampling_is_deterministic():
    a = sample_model_graph(TWO, 0.2, 5000, mode="iid", rng=derive_stream(1, 2, 3))
    b = sample_model_graph(TWO, 0.2, 5000, mode="iid", rng=derive_stream(1, 2, 3))
    assert a.to_bytes() == b.to_bytes()
    c = sample_model_graph(TWO, 0.2, 5000, mode="iid", rng=derive_stream(1, 2, 4))
    assert a.to_bytes() != c.to_bytes()


# -- components -------------------------------------------------------------


def test_path_is_one_component():
    g = TypedGraph(5, np.zeros(5, dtype=int), np.array([[0, 1], [1, 2], [2, 3], [3, 4]]))
    st_ = components(g, HOM)
    assert st_.component_count == 1 and st_.c1 == 5


def test_empty_graph_components():
    types = np.array([0, 1, 0, 0])
    g = TypedGraph(4, types, np.empty((0, 2), dtype=int))
    s = components(g, TWO)
    assert s.component_count == 4 and s.c1 == 1
    assert s.max_activity == 2.0


def test_dsu_matches_bfs_sweep():
    sp = build_space([(1, 1, 0.5), (2, 2, 1.25), (3, 1, 3.0)])
    rng = np.random.default_rng(2024)
    for i in range(100):
        n = int(rng.integers(1, 65))
        c = float(rng.uniform(0.0, 3.0))
        g = sample_model_graph(sp, c, n, rng=derive_stream(7, i))
        a, b = components(g, sp), components_bfs(g, sp)
        assert a.same_as(b), i


def test_largest_size_and_activity_reported_separately():
    # {0,1}: two activity-1 vertices; {2}: one activity-5 vertex
    sp = build_space([(1, 1, 1.0), (2, 1, 5.0)])
    g = TypedGraph(3, np.array([0, 0, 1]), np.array([[0, 1]]))
    s = components(g, sp)
    assert s.c1 == 2 and s.max_activity == 5.0


@settings(max_examples=60, deadline=None)
@given(
    st.integers(1, 40).flatmap(
        lambda n: st.tuples(
            st.just(n), st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=60)
        )
    )
)
def test_partition_properties(data):
    n, pairs = data
    edges = np.array([(min(u, v), max(u, v)) for u, v in pairs if u != v], dtype=np.int64).reshape(-1, 2)
    types = np.arange(n) % 2
    g = TypedGraph(n, types, edges)
    s = components(g, TWO)
    assert s.sizes.sum() == n
    assert s.activities.sum() == pytest.approx(TWO.psi[types].sum())
    assert s.c1 == s.sizes.max() and s.max_activity == s.activities.max()
    assert s.same_as(components_bfs(g, TWO))


def test_unionfind_class():
    uf = UnionFind(6)
    uf.union(0, 1)
    uf.union_edges([2, 4], [3, 5])
    uf.union(1, 3)
    labels, k = uf.labels()
    assert k == 2
    assert uf.find(0) == uf.find(2) and uf.find(4) != uf.find(0)


def test_edgelist_roundtrip():
    g = sample_model_graph(TWO, 1.0, 200, rng=3)
    buf = io.StringIO()
    write_edgelist(g, buf)
    assert buf.getvalue().splitlines()[0] == f"200 {g.m}"
    buf.seek(0)
    n, edges = read_edgelist(buf)
    assert n == 200 and np.array_equal(edges, g.edges)
