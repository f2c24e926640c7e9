"""
Unit tests for multilevel coarsening and the pooling permutation.
"""

import pytest
import numpy as np

from src.errors import ConfigurationError, ShapeError, ValidationError
from src.graph.coarsening import (
    MAX_COARSEN_LEVELS,
    build_perm,
    coarsening_depth,
    graclus_coarsen,
    perm_data,
)
from src.graph.construction import rand_graph
from src.graph.weighted_graph import WeightedGraph


def integer_weighted_graph(rng: np.random.Generator, n: int, p: float) -> WeightedGraph:
    """Random graph with small integer weights so sums are exact."""
    mask = np.triu(rng.random((n, n)) < p, k=1)
    w = np.where(mask, rng.integers(1, 10, size=(n, n)), 0).astype(np.float64)
    return WeightedGraph(w + w.T)


def complete_graph(n: int) -> WeightedGraph:
    return WeightedGraph(np.ones((n, n)) - np.eye(n))


class TestGraclusExamples:
    """Test small hand-checked hierarchies."""

    def test_single_edge(self):
        """Test two connected vertices merge into one."""
        g = WeightedGraph.from_edges(2, [(0, 1, 1.0)])
        hierarchy = graclus_coarsen(g, 1, seed=0)
        assert hierarchy.padded_sizes == [2, 1]
        assert hierarchy.num_fake(0) == 0
        assert hierarchy.levels[1].num_edges == 0
        assert hierarchy.matched_weight == (1.0,)

    def test_isolated_vertex(self):
        """Test a lone vertex gets one fake sibling."""
        hierarchy = graclus_coarsen(WeightedGraph.empty(1), 1, seed=0)
        assert hierarchy.padded_sizes == [2, 1]
        assert hierarchy.num_fake(0) == 1
        np.testing.assert_array_equal(hierarchy.perm, [0, 1])

    def test_complete_four(self):
        """Test K4 collapses to two vertices joined by weight 4."""
        hierarchy = graclus_coarsen(complete_graph(4), 1, seed=3)
        coarse = hierarchy.levels[1]
        assert coarse.n == 2
        assert coarse.edges() == [(0, 1, 4.0)]
        assert hierarchy.num_fake(0) == 0
        assert hierarchy.matched_weight == (2.0,)

    def test_children_are_matched_pairs(self):
        """Test positions 2c and 2c+1 share a parent."""
        hierarchy = graclus_coarsen(complete_graph(4), 1, seed=5)
        parent = hierarchy.parents[0]
        perm = hierarchy.perm
        for c in range(2):
            assert parent[perm[2 * c]] == parent[perm[2 * c + 1]] == hierarchy.orderings[1][c]

    def test_auto_depth_ends_edgeless(self):
        """Test automatic depth stops once no edge remains."""
        g = rand_graph(20, 0.4, seed=1)
        hierarchy = graclus_coarsen(g, None, seed=0)
        assert hierarchy.levels[-1].num_edges == 0
        assert all(level.num_edges > 0 for level in hierarchy.levels[:-1])

    def test_auto_depth_respects_minimum(self):
        """Test min_levels forces coarsening of an edgeless graph."""
        hierarchy = graclus_coarsen(WeightedGraph.empty(3), None, seed=0, min_levels=3)
        assert hierarchy.num_levels == 3
        assert hierarchy.padded_sizes == [24, 12, 6, 3]

    def test_auto_depth_respects_maximum(self):
        """Test the level cap bounds automatic depth."""
        g = complete_graph(40)
        hierarchy = graclus_coarsen(g, None, seed=0, max_levels=2)
        assert hierarchy.num_levels == 2

    def test_explicit_depth_past_edgeless(self):
        """Test explicit depth keeps halving edgeless levels."""
        g = WeightedGraph.from_edges(2, [(0, 1, 1.0)])
        hierarchy = graclus_coarsen(g, 3, seed=0)
        assert hierarchy.padded_sizes == [8, 4, 2, 1]
        assert hierarchy.num_fake(0) == 6

    def test_scaled_laplacians(self):
        """Test one Laplacian per requested level."""
        hierarchy = graclus_coarsen(complete_graph(4), 2, seed=0)
        laplacians = hierarchy.scaled_laplacians(2)
        assert [lap.shape for lap in laplacians] == [(4, 4), (2, 2)]
        with pytest.raises(ConfigurationError):
            hierarchy.scaled_laplacians(4)


class TestGraclusProperties:
    """Test structural guarantees on random graphs."""

    def test_random_hierarchies(self):
        """Test halving, fake isolation, bijection and weight conservation on 500 graphs."""
        rng = np.random.default_rng(0)
        for trial in range(500):
            n = int(rng.integers(1, 41))
            g = integer_weighted_graph(rng, n, float(rng.uniform(0.05, 0.8)))
            levels = int(rng.integers(1, 5))
            hierarchy = graclus_coarsen(g, levels, seed=trial)

            sizes = hierarchy.padded_sizes
            assert len(sizes) == levels + 1
            for finer, coarser in zip(sizes, sizes[1:]):
                assert finer == 2 * coarser, f"graph {trial}: sizes {sizes}"

            for level, graph in enumerate(hierarchy.levels):
                fake = hierarchy.fake[level]
                assert np.all(graph.degrees[fake] == 0.0), f"graph {trial}, level {level}"

            perm = hierarchy.perm
            np.testing.assert_array_equal(np.sort(perm), np.arange(sizes[0]))
            assert int((perm < n).sum()) == n

            assert hierarchy.levels[0].total_weight == g.total_weight
            for level in range(levels):
                before = hierarchy.levels[level].total_weight
                after = hierarchy.levels[level + 1].total_weight
                assert before == after + hierarchy.matched_weight[level], (
                    f"graph {trial}, level {level}: {before} != {after} + "
                    f"{hierarchy.matched_weight[level]}"
                )

    def test_pairs_follow_parent_maps(self):
        """Test every real position maps to the coarse vertex at position p // 2."""
        rng = np.random.default_rng(1)
        for trial in range(50):
            n = int(rng.integers(2, 30))
            hierarchy = graclus_coarsen(integer_weighted_graph(rng, n, 0.3), 3, seed=trial)
            for level, parent in enumerate(hierarchy.parents):
                ordering = hierarchy.orderings[level]
                coarse = hierarchy.orderings[level + 1]
                for p, v in enumerate(ordering):
                    if v < parent.size:
                        assert parent[v] == coarse[p // 2]

    def test_padded_graph_is_permuted_input(self):
        """Test level 0 is the input graph in perm order."""
        rng = np.random.default_rng(2)
        g = integer_weighted_graph(rng, 13, 0.4)
        hierarchy = graclus_coarsen(g, 2, seed=0)
        perm = hierarchy.perm
        real = np.flatnonzero(perm < g.n)
        dense = hierarchy.levels[0].dense()
        expected = g.dense()[np.ix_(perm[real], perm[real])]
        np.testing.assert_array_equal(dense[np.ix_(real, real)], expected)

    def test_deterministic(self):
        """Test identical (graph, seed) pairs give identical hierarchies."""
        g = rand_graph(30, 0.3, seed=4)
        first = graclus_coarsen(g, 3, seed=9)
        second = graclus_coarsen(g, 3, seed=9)
        np.testing.assert_array_equal(first.perm, second.perm)
        for a, b in zip(first.levels, second.levels):
            assert a == b


class TestGraclusErrors:
    """Test invalid coarsening requests."""

    def test_empty_graph(self):
        """Test a graph without vertices is refused."""
        with pytest.raises(ConfigurationError):
            graclus_coarsen(WeightedGraph.empty(0), 1, seed=0)

    def test_zero_levels(self):
        """Test num_levels < 1 is refused."""
        with pytest.raises(ConfigurationError):
            graclus_coarsen(complete_graph(4), 0, seed=0)

    def test_minimum_above_limit(self):
        """Test min_levels above the cap is refused."""
        with pytest.raises(ConfigurationError):
            graclus_coarsen(complete_graph(4), None, seed=0, min_levels=MAX_COARSEN_LEVELS + 1)


class TestBuildPerm:
    """Test ordering from raw parent maps."""

    def test_two_pairs(self):
        """Test parent maps [0, 1, 0, 1] then [0, 0]."""
        perm = build_perm([np.array([0, 1, 0, 1]), np.array([0, 0])])
        np.testing.assert_array_equal(perm, [0, 2, 1, 3])

    def test_singleton_padding(self):
        """Test a singleton cluster gets a fake child."""
        perm = build_perm([np.array([0, 0, 1])])
        np.testing.assert_array_equal(perm, [0, 1, 2, 3])

    def test_too_many_children(self):
        """Test a triple cluster raises ValidationError."""
        with pytest.raises(ValidationError):
            build_perm([np.array([0, 0, 0])])

    def test_childless_cluster(self):
        """Test a gap in cluster ids raises ValidationError."""
        with pytest.raises(ValidationError):
            build_perm([np.array([0, 2])])

    def test_empty_list(self):
        """Test an empty hierarchy raises ValidationError."""
        with pytest.raises(ValidationError):
            build_perm([])

    def test_from_hierarchy(self):
        """Test a hierarchy yields its own level-0 ordering."""
        hierarchy = graclus_coarsen(rand_graph(10, 0.5, seed=0), 2, seed=0)
        np.testing.assert_array_equal(build_perm(hierarchy), hierarchy.perm)


class TestPermData:
    """Test scattering data into padded order."""

    def test_vector(self):
        """Test fake positions are zero-filled."""
        out = perm_data(np.array([10.0, 20.0]), np.array([1, 2, 0, 3]), 4)
        np.testing.assert_array_equal(out, [20.0, 0.0, 10.0, 0.0])

    def test_vertex_axis(self):
        """Test permutation along a non-leading axis."""
        x = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
        out = perm_data(x, np.array([1, 2, 0, 3]), 4, vertex_axis=1)
        np.testing.assert_array_equal(
            out, [[2.0, 0.0, 1.0, 0.0], [4.0, 0.0, 3.0, 0.0], [6.0, 0.0, 5.0, 0.0]]
        )

    def test_wrong_length(self):
        """Test a perm that does not cover padded_n raises ShapeError."""
        with pytest.raises(ShapeError):
            perm_data(np.ones(2), np.array([0, 1, 2]), 4)

    def test_real_count_mismatch(self):
        """Test data with the wrong vertex count raises ShapeError."""
        with pytest.raises(ShapeError):
            perm_data(np.ones(3), np.array([0, 5, 6, 7]), 4)


class TestCoarseningDepth:
    """Test depth resolution against a network."""

    def test_auto(self):
        """Test 0 means automatic depth."""
        assert coarsening_depth(0, 2) is None

    def test_explicit(self):
        """Test explicit depths pass through."""
        assert coarsening_depth(4, 2) == 4

    def test_too_shallow(self):
        """Test fewer levels than pools raises ConfigurationError."""
        with pytest.raises(ConfigurationError):
            coarsening_depth(1, 2)

    def test_negative(self):
        """Test negative depths raise ConfigurationError."""
        with pytest.raises(ConfigurationError):
            coarsening_depth(-1, 0)

    def test_auto_depth_padding(self):
        """Test automatic depth pads level 0 for every extra level."""
        graph = rand_graph(24, 0.3, seed=6)
        auto = graclus_coarsen(graph, None, seed=0, min_levels=1)
        shallow = graclus_coarsen(graph, 1, seed=0)
        assert auto.num_levels >= 1
        assert auto.padded_sizes[0] == auto.padded_sizes[-1] * 2 ** auto.num_levels
        assert shallow.padded_sizes[0] <= auto.padded_sizes[0]
        assert auto.num_fake(0) == auto.padded_sizes[0] - 24
