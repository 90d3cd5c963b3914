import math
from itertools import combinations

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forestz.graph import (
    Cycle,
    GraphFormatError,
    InteractionGraph,
    TreeCotree,
    UnionFind,
    classify_density,
    cycle_algebra,
    dual_graph,
    format_edge_list,
    fundamental_cycles,
    girth,
    max_spanning_tree,
    parse_edge_list,
)

from conftest import book, complete, graphs, ring


def to_nx(g):
    h = nx.Graph()
    h.add_nodes_from(range(g.n_nodes))
    for i, j, w in g.edges:
        h.add_edge(i, j, weight=w)
    return h


def gf2_rank(vectors):
    basis = []
    for v in vectors:
        for b in basis:
            v = min(v, v ^ b)
        if v:
            basis.append(v)
    return len(basis)


def mask(edges):
    return sum(1 << k for k in edges)


class TestInteractionGraph:
    def test_edges_canonicalized(self):
        g = InteractionGraph(3, ((2, 0, 1.5), (1, 0)))
        assert g.edges == ((0, 1, 1.0), (0, 2, 1.5))
        assert g.find_edge(2, 0) == 1

    @pytest.mark.parametrize(
        "edges",
        [((0, 0),), ((0, 3),), ((0, 1), (1, 0)), ((0, 1, -1.0),), ((0, 1, math.inf),)],
    )
    def test_invalid_edges_rejected(self, edges):
        with pytest.raises(ValueError):
            InteractionGraph(3, edges)

    def test_components_and_forest(self):
        g = InteractionGraph.from_pairs(5, [(0, 1), (3, 4)])
        assert g.components() == [[0, 1], [2], [3, 4]]
        assert g.is_forest()
        assert not ring(4).is_forest()

    def test_union_find(self):
        uf = UnionFind(4)
        assert uf.union(0, 1) and uf.union(2, 3)
        assert not uf.union(1, 0)
        assert uf.find(0) == uf.find(1) != uf.find(2)


class TestEdgeListFormat:
    def test_round_trip(self):
        g = InteractionGraph(4, ((0, 1, 0.25), (1, 3, 2.0)))
        assert parse_edge_list(format_edge_list(g)) == g

    def test_comments_and_default_weight(self):
        g = parse_edge_list("# header\n3\n0 1  # first\n\n1 2 0.5\n")
        assert g.edges == ((0, 1, 1.0), (1, 2, 0.5))

    @pytest.mark.parametrize(
        "text, line",
        [("3\n0 1\n1 x\n", 3), ("2\n0 5\n", 2), ("3\n0 1\n1 0\n", 3), ("3\n0 1 2 3\n", 2), ("a\n", 1)],
    )
    def test_errors_name_the_line(self, text, line):
        with pytest.raises(GraphFormatError, match=f"src:{line}:"):
            parse_edge_list(text, "src")

    def test_missing_header(self):
        with pytest.raises(GraphFormatError, match="missing node count"):
            parse_edge_list("# nothing\n")


class TestGirth:
    def test_small_cases(self):
        assert girth(complete(3)) == 3
        assert girth(ring(5)) == 5
        assert girth(InteractionGraph.from_pairs(4, [(0, 1), (1, 2), (1, 3)])) == math.inf
        assert girth(InteractionGraph(0)) == math.inf

    def test_petersen(self):
        assert girth(InteractionGraph.from_pairs(10, nx.petersen_graph().edges())) == 5

    @settings(max_examples=150, deadline=None)
    @given(graphs(max_nodes=8))
    def test_matches_networkx(self, g):
        assert girth(g) == nx.girth(to_nx(g))


class TestMaxSpanningTree:
    def test_triangle_weights(self):
        g = InteractionGraph(3, ((0, 1, 3.0), (1, 2, 2.0), (0, 2, 1.0)))
        tc = max_spanning_tree(g)
        assert {g.weight(k) for k in tc.tree_edges} == {3.0, 2.0}
        assert [g.weight(k) for k in tc.cotree_edges] == [1.0]

    def test_equal_weights_keep_canonical_order(self):
        g = ring(4)
        tc = max_spanning_tree(g)
        assert tc.tree_edges == (0, 1, 2)
        assert tc.cotree_edges == (3,)

    def test_matches_brute_force_over_spanning_trees(self, rng):
        for _ in range(5):
            pairs = [p for p in combinations(range(8), 2) if rng.random() < 0.45]
            g = InteractionGraph.from_pairs(8, pairs, rng.uniform(0, 1, len(pairs)))
            h = to_nx(g)
            rank = 8 - nx.number_connected_components(h)
            best = max(
                sum(g.weight(k) for k in subset)
                for subset in combinations(range(g.n_edges), rank)
                if nx.is_forest(h.edge_subgraph([g.endpoints(k) for k in subset]))
            )
            tc = max_spanning_tree(g)
            assert len(tc.tree_edges) == rank
            assert sum(g.weight(k) for k in tc.tree_edges) == pytest.approx(best, rel=1e-12)

    @settings(max_examples=80, deadline=None)
    @given(graphs(max_nodes=7), st.sampled_from([np.exp, np.cbrt, lambda w: 3 * w + 1]))
    def test_invariant_under_monotone_transform(self, g, f):
        # integer weights so the transforms stay strictly increasing in floating point
        g = g.with_weights(np.round([e[2] for e in g.edges]).tolist())
        w = np.array([e[2] for e in g.edges])
        assert max_spanning_tree(g).tree_edges == max_spanning_tree(g, f(w).tolist()).tree_edges

    def test_disconnected_graph_gives_spanning_forest(self):
        g = InteractionGraph.from_pairs(6, [(0, 1), (1, 2), (0, 2), (3, 4)])
        tc = max_spanning_tree(g)
        assert len(tc.tree_edges) == 3
        assert len(tc.cotree_edges) == 1

    def test_tree_cotree_validation(self):
        g = ring(4)
        with pytest.raises(ValueError, match="cycle"):
            TreeCotree(g, (0, 1, 2, 3), ())
        with pytest.raises(ValueError, match="span"):
            TreeCotree(g, (0, 1), (2, 3))
        with pytest.raises(ValueError, match="partition"):
            TreeCotree(g, (0, 1), (2,))


class TestFundamentalCycles:
    def test_ring_and_triangle(self):
        cycles = fundamental_cycles(max_spanning_tree(ring(4)))
        assert [c.length for c in cycles] == [4]
        assert [c.length for c in fundamental_cycles(max_spanning_tree(complete(3)))] == [3]

    def test_two_triangles_basis_closure(self):
        g = InteractionGraph.from_pairs(4, [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)])
        shared = g.find_edge(1, 2)
        outer = frozenset(k for k in range(g.n_edges) if k != shared)
        all_cycles = {
            frozenset(g.find_edge(a, b) for a, b in zip(c, c[1:] + c[:1]))
            for c in nx.simple_cycles(to_nx(g))
        }
        assert len(all_cycles) == 3
        for tree in combinations(range(g.n_edges), 3):
            if not g.subgraph(tree).is_forest():
                continue
            a, b = fundamental_cycles(TreeCotree.from_tree(g, tree))
            sym = cycle_algebra(a, b, "symdiff")
            assert {a.edges, b.edges, sym} == all_cycles
            if shared in tree:
                assert sym == outer

    @settings(max_examples=120, deadline=None)
    @given(graphs(max_nodes=7, max_edges=10))
    def test_cycle_basis_properties(self, g):
        tc = max_spanning_tree(g)
        cycles = fundamental_cycles(tc)
        h = to_nx(g)
        assert len(cycles) == g.n_edges - g.n_nodes + nx.number_connected_components(h)
        tree = set(tc.tree_edges)
        for e, c in zip(tc.cotree_edges, cycles):
            assert e in c.edges
            assert c.edges - {e} <= tree
            # T + e holds exactly one cycle and it is C_e
            found = nx.cycle_basis(h.edge_subgraph([g.endpoints(k) for k in tree | {e}]))
            assert len(found) == 1
            assert {g.find_edge(a, b) for a, b in zip(found[0], found[0][1:] + found[0][:1])} == c.edges
            assert girth(g) <= c.length
        # every simple cycle lies in the span of the fundamental cycles
        basis = [mask(c.edges) for c in cycles]
        for cyc in nx.simple_cycles(h):
            if len(cyc) < 3:
                continue
            edges = {g.find_edge(a, b) for a, b in zip(cyc, cyc[1:] + cyc[:1])}
            assert gf2_rank(basis + [mask(edges)]) == len(basis)


class TestCycleAlgebra:
    def setup_method(self):
        self.g = InteractionGraph.from_pairs(7, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)])
        e = self.g.find_edge
        self.a = Cycle({e(0, 1), e(1, 2), e(0, 2)}, self.g)
        self.b = Cycle({e(3, 4), e(4, 5), e(3, 5)}, self.g)

    def test_edges_of_fixture(self):
        assert {self.g.endpoints(k) for k in self.a.edges} == {(0, 1), (0, 2), (1, 2)}

    def test_disjoint_symdiff_is_union(self):
        assert cycle_algebra(self.a, self.b, "symdiff") == cycle_algebra(self.a, self.b, "union")
        assert cycle_algebra(self.a, self.b, "intersection") == frozenset()

    def test_self_symdiff_empty(self):
        assert cycle_algebra(self.a, self.a, "symdiff") == frozenset()

    def test_unknown_op(self):
        with pytest.raises(ValueError):
            cycle_algebra(self.a, self.b, "product")

    def test_odd_degree_rejected(self):
        with pytest.raises(ValueError, match="odd"):
            Cycle({self.g.find_edge(0, 1)}, self.g)

    def test_node_order(self):
        assert ring(5).n_edges == 5
        c = Cycle(set(range(5)), ring(5))
        assert c.node_order() == [0, 1, 2, 3, 4]
        with pytest.raises(ValueError):
            Cycle(self.a.edges | self.b.edges, self.g).node_order()


class TestDensity:
    def test_ring_is_sparse(self):
        rep = classify_density(ring(7))
        assert (rep.k_max_dual_degree, rep.girth, rep.label) == (0, 7, "sparse")

    def test_book_of_five_is_dense(self):
        g = book(5)
        tc = max_spanning_tree(g)
        dual = dual_graph(tc)
        assert dual.n_nodes == 5 and dual.n_edges == 10
        rep = classify_density(g)
        assert rep.k_max_dual_degree == 4 and rep.girth == 3
        assert rep.ratio == pytest.approx(4 / 3)
        assert rep.label == "dense"

    def test_chain_of_triangles_has_path_dual(self):
        pairs = []
        for t in range(4):
            a, b, c = 3 * t, 3 * t + 1, 3 * t + 2
            pairs += [(a, b), (b, c), (a, c)]
            if t:
                pairs.append((3 * t - 1, a))
        rep = classify_density(InteractionGraph.from_pairs(12, pairs))
        assert rep.k_max_dual_degree <= 2

    def test_tree_reports_no_cycles(self):
        rep = classify_density(InteractionGraph.from_pairs(3, [(0, 1), (1, 2)]))
        assert rep.label == "no cycles" and rep.girth == math.inf and not rep.has_cycles

    def test_threshold_controls_label(self):
        g = book(3)
        assert classify_density(g).ratio == pytest.approx(2 / 3)
        assert classify_density(g, threshold=0.5).label == "dense"
        assert classify_density(g, threshold=1.0).label == "sparse"
