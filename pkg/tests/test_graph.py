import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from graphgen.errors import SearchBudgetExceeded
from graphgen.graph import (InvariantSpec, LabeledGraph, augment_labels, clustering_coefficient,
                            find_monomorphism, is_isomorphic, max_connected_component,
                            permute_nodes, strip_invariants, subgraph_isomorphic, validate_graph)

from _support import SAMPLE_GRAPH, nx_contains, nx_isomorphic, random_graph


def cycle(n, lab="A"):
    return LabeledGraph.build([lab] * n, [(i, (i + 1) % n, "x") for i in range(n)])


def clique(n, lab="A"):
    return LabeledGraph.build([lab] * n, [(i, j, "x") for i, j in itertools.combinations(range(n), 2)])


class TestValidate:
    def test_ok(self):
        assert validate_graph(SAMPLE_GRAPH).ok

    def test_self_loop(self):
        r = validate_graph(LabeledGraph.build("AB", [(0, 1, "x"), (1, 1, "x")]))
        assert not r.ok and any("self-loop" in v for v in r.violations)

    def test_parallel(self):
        r = validate_graph(LabeledGraph.build("AB", [(0, 1, "x"), (1, 0, "y")]))
        assert any("parallel" in v for v in r.violations)

    def test_disconnected_and_empty(self):
        assert "disconnected" in validate_graph(LabeledGraph.build("ABC", [(0, 1)])).violations
        assert "empty graph" in validate_graph(LabeledGraph(())).violations

    def test_dangling(self):
        r = validate_graph(LabeledGraph.build("AB", [(0, 5, "x")]))
        assert any("dangling" in v for v in r.violations)

    def test_single_node_is_valid(self):
        assert validate_graph(LabeledGraph(("A",))).ok


class TestIsomorphism:
    def test_relabelled_sample(self):
        other = LabeledGraph.build(["Y", "X", "Y", "Z"], SAMPLE_GRAPH.edges)
        assert is_isomorphic(SAMPLE_GRAPH, SAMPLE_GRAPH)
        assert not is_isomorphic(SAMPLE_GRAPH, other)

    def test_hexagon_vs_two_triangles(self):
        # same degree sequence and label counts
        a = cycle(6)
        b = LabeledGraph.build("A" * 6, [(0, 1, "x"), (1, 2, "x"), (2, 0, "x"),
                                         (3, 4, "x"), (4, 5, "x"), (5, 3, "x")])
        assert not is_isomorphic(a, b)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10**6), st.integers(2, 8))
    def test_matches_networkx(self, seed, n):
        rng = np.random.default_rng(seed)
        a = random_graph(rng, n, "AB", "xy")
        b = random_graph(rng, n, "AB", "xy") if rng.random() < 0.5 else \
            permute_nodes(a, rng.permutation(n).tolist())
        assert is_isomorphic(a, b) == nx_isomorphic(a, b)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6))
    def test_permutation_invariance(self, seed):
        rng = np.random.default_rng(seed)
        g = random_graph(rng, int(rng.integers(1, 10)), "ABC", "xy")
        assert is_isomorphic(g, permute_nodes(g, rng.permutation(g.n).tolist()))


class TestSubgraph:
    def test_cycle_in_clique(self):
        assert subgraph_isomorphic(cycle(4), clique(4))
        assert not subgraph_isomorphic(clique(4), cycle(4))

    def test_reflexive_and_edge(self):
        assert subgraph_isomorphic(SAMPLE_GRAPH, SAMPLE_GRAPH)
        edge = LabeledGraph.build("XY", [(0, 1, "b")])
        assert subgraph_isomorphic(edge, SAMPLE_GRAPH)
        assert not subgraph_isomorphic(LabeledGraph.build("XY", [(0, 1, "a")]), SAMPLE_GRAPH)

    def test_budget(self):
        # K4 cannot embed in a bipartite graph, but only search discovers that
        k66 = LabeledGraph.build("A" * 12, [(i, j, "x") for i in range(6) for j in range(6, 12)])
        with pytest.raises(SearchBudgetExceeded):
            find_monomorphism(clique(4), k66, budget=50)
        assert find_monomorphism(clique(4), k66) is None

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10**6))
    def test_matches_networkx(self, seed):
        rng = np.random.default_rng(seed)
        p = random_graph(rng, int(rng.integers(2, 5)), "AB", "x", extra=0.2)
        t = random_graph(rng, int(rng.integers(3, 8)), "AB", "x", extra=0.4)
        assert subgraph_isomorphic(p, t) == nx_contains(p, t)

    def test_transitive_spot_check(self):
        rng = np.random.default_rng(3)
        hits = 0
        for _ in range(200):
            a = random_graph(rng, 3, "A", "x", 0.3)
            b = random_graph(rng, 5, "A", "x", 0.3)
            c = random_graph(rng, 7, "A", "x", 0.4)
            if subgraph_isomorphic(a, b) and subgraph_isomorphic(b, c):
                hits += 1
                assert subgraph_isomorphic(a, c)
        assert hits > 10


class TestComponents:
    def test_largest_component(self):
        g = LabeledGraph.build("ABCDE", [(0, 1, "x"), (2, 3, "x"), (3, 4, "x")])
        assert max_connected_component(g) == LabeledGraph.build("CDE", [(0, 1, "x"), (1, 2, "x")])

    def test_tie_prefers_more_edges_then_lowest_id(self):
        g = LabeledGraph.build("ABCDEF", [(0, 1, "x"), (1, 2, "x"), (3, 4, "x"), (4, 5, "x"), (3, 5, "x")])
        assert max_connected_component(g).m == 3
        h = LabeledGraph.build("ABCD", [(2, 3, "x"), (0, 1, "x")])
        assert max_connected_component(h).node_labels == ("A", "B")


class TestInvariants:
    def test_clustering(self):
        star_plus = LabeledGraph.build("AAAA", [(0, 1), (0, 2), (0, 3), (1, 2)])
        assert clustering_coefficient(star_plus, 0) == pytest.approx(1 / 3)
        assert clustering_coefficient(clique(4), 0) == 1.0
        assert clustering_coefficient(cycle(5), 0) == 0.0

    def test_degree_prefix(self):
        star = LabeledGraph.build("ABBBBB", [(0, i, "x") for i in range(1, 6)])
        assert augment_labels(star, InvariantSpec(use_degree=True)).node_labels[0] == "5, A"

    def test_both_prefixes(self):
        tri = LabeledGraph.build("AAA", [(0, 1), (1, 2), (0, 2)])
        spec = InvariantSpec(use_degree=True, use_clustering_coefficient=True)
        assert augment_labels(tri, spec).node_labels == ("2, 1.00, A",) * 3

    def test_empty_spec_identity(self):
        assert augment_labels(SAMPLE_GRAPH, InvariantSpec()) == SAMPLE_GRAPH

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6), st.booleans(), st.booleans())
    def test_strip_roundtrip(self, seed, deg, cc):
        g = random_graph(np.random.default_rng(seed), 7, ["A", "B, C", "7"], "x")
        spec = InvariantSpec(deg, cc)
        assert strip_invariants(augment_labels(g, spec), spec) == g
