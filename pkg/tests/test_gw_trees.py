"""Tests for Galton-Watson trees: pgf algebra, both samplers, stretches and bush erasure."""

from collections import Counter

import pytest
from scipy.stats import chi2_contingency

from frogsim.distributions import FrogInit, OffspringDistribution
from frogsim.enums import VertexLabel
from frogsim.errors import BushCapExceeded, DomainError
from frogsim.gw_trees import (
    ExplicitTree,
    backbone_distribution,
    backbone_pgf,
    bush_distribution,
    bush_pgf,
    erase_bushes,
    expected_bush_size,
    extinction_prob,
    label_stretches,
    sample_bush_sizes,
    sample_surviving_tree,
    sample_tree,
    sample_tree_decomposed,
    truncate_stretches,
    window_signature,
)
from tests.conftest import SEED
from tests.helpers import path_below, tree_with_stretches


class TestGeneratingFunctions:
    def test_extinction_probability(self, quarter):
        assert extinction_prob(quarter) == pytest.approx(1 / 3, abs=1e-10)

    def test_no_leaves_never_dies(self):
        assert extinction_prob(OffspringDistribution.from_mapping({1: 0.5, 3: 0.5})) == 0.0

    def test_critical_law_dies(self):
        assert extinction_prob(OffspringDistribution.from_mapping({0: 0.5, 2: 0.5})) == 1.0

    def test_backbone_law(self, quarter):
        law = backbone_distribution(quarter)
        assert law.probs == pytest.approx((0.0, 0.5, 0.5))

    def test_backbone_pgf_matches_its_coefficients(self, quarter):
        f_star = backbone_pgf(quarter)
        for s in (0.0, 0.3, 0.7, 1.0):
            assert f_star(s) == pytest.approx(0.5 * s + 0.5 * s * s)

    def test_bush_law(self, quarter):
        law = bush_distribution(quarter)
        assert law.probs == pytest.approx((0.75, 0.0, 0.25))
        assert law.mean == pytest.approx(0.5)

    def test_bush_pgf(self, quarter):
        f_tilde = bush_pgf(quarter)
        assert f_tilde(1.0) == pytest.approx(1.0)
        assert f_tilde(0.5) == pytest.approx(0.75 + 0.25 * 0.25)

    def test_expected_bush_size(self, quarter):
        assert expected_bush_size(quarter) == pytest.approx(2.0)

    def test_sampled_bush_sizes(self, quarter):
        """Total progeny of the bush law has mean 2 and variance 0.75 / 0.5^3 = 6."""
        sizes = sample_bush_sizes(quarter, SEED, 20_000)
        assert sizes.min() >= 1
        assert abs(sizes.mean() - 2.0) < 3 * (6.0 / 20_000) ** 0.5

    def test_no_bushes_without_leaves(self):
        with pytest.raises(DomainError):
            bush_distribution(OffspringDistribution.point(2))

    def test_no_backbone_when_the_tree_dies(self):
        with pytest.raises(DomainError):
            backbone_distribution(OffspringDistribution.from_mapping({0: 0.5, 1: 0.5}))


class TestLazySampling:
    def test_traversal_order_does_not_matter(self):
        dist = OffspringDistribution.from_mapping({0: 0.2, 1: 0.3, 2: 0.3, 3: 0.2})
        first = sample_tree(dist, SEED, depth_horizon=6)
        edges = first.edges()

        second = sample_tree(dist, SEED, depth_horizon=6)
        # Touch the deepest vertices first.
        for v in sorted(edges, key=lambda e: -len(e[1])):
            second.children(v[1])
        assert second.edges() == edges

    def test_frog_counts_are_fixed_by_the_seed(self):
        init = FrogInit.from_mapping({0: 0.5, 1: 0.3, 4: 0.2})
        a = sample_tree(OffspringDistribution.point(3), SEED, depth_horizon=3)
        b = sample_tree(OffspringDistribution.point(3), SEED, depth_horizon=3)
        backwards = {v: b.frog_count(v, init) for v in reversed(list(b.walk()))}
        assert {v: a.frog_count(v, init) for v in a.walk()} == backwards

    def test_different_seeds_differ(self):
        dist = OffspringDistribution.from_mapping({1: 0.5, 2: 0.5})
        trees = {frozenset(sample_tree(dist, s, depth_horizon=5).edges()) for s in range(10)}
        assert len(trees) > 1

    def test_depth_horizon_must_be_positive(self):
        with pytest.raises(DomainError):
            sample_tree(OffspringDistribution.point(2), SEED, depth_horizon=0)

    def test_window_of_the_homogeneous_tree(self):
        tree = sample_tree(OffspringDistribution.point(3), SEED, depth_horizon=2)
        assert len(list(tree.walk())) == 13
        assert window_signature(tree) == (3, 9)

    def test_root_degree_frequencies(self):
        dist = OffspringDistribution.from_mapping({1: 0.4, 2: 0.6})
        ones = sum(len(sample_tree(dist, s, 1).children(())) == 1 for s in range(10_000))
        assert abs(ones / 10_000 - 0.4) < 3 * (0.24 / 10_000) ** 0.5

    def test_surviving_tree_reaches_the_horizon(self, quarter):
        tree = sample_surviving_tree(quarter, SEED, depth_horizon=8)
        assert any(tree.depth(v) == 8 for v in tree.walk())


class TestDecomposedSampler:
    def test_same_window_law_as_the_direct_sampler(self):
        """Root degree and depth-2 count, chi-square over 10000 trees from each sampler."""
        dist = OffspringDistribution.from_mapping({1: 0.4, 2: 0.6})
        direct = Counter(window_signature(sample_tree(dist, s, 2)) for s in range(10_000))
        decomposed = Counter(
            window_signature(sample_tree_decomposed(dist, s, 2)) for s in range(10_000, 20_000)
        )
        categories = sorted(direct.keys() | decomposed.keys())
        assert set(categories) == {(1, 1), (1, 2), (2, 2), (2, 3), (2, 4)}
        table = [[direct[c] for c in categories], [decomposed[c] for c in categories]]
        _, p_value, _, _ = chi2_contingency(table)
        assert p_value > 1e-3

    def test_marked_vertex_grows_a_run(self):
        dist = OffspringDistribution.from_mapping({1: 0.5, 3: 0.5})
        for seed in range(50):
            tree = sample_tree_decomposed(dist, seed, 10)
            draw = tree.background_draw(())
            if not draw.marked:
                continue
            run = path_below((), draw.run_length)
            assert all(len(tree.children(v)) == 1 for v in run)
            assert len(tree.children(run[-1] + (0,))) == draw.offspring
            return
        pytest.fail("no marked root in 50 seeds")

    def test_background_law_has_no_ones(self):
        dist = OffspringDistribution.from_mapping({0: 0.2, 1: 0.3, 2: 0.5})
        tree = sample_tree_decomposed(dist, SEED, 5)
        assert tree.background.p(1) == 0.0
        assert tree.background.probs == pytest.approx((0.2 / 0.7, 0.0, 0.5 / 0.7))

    @pytest.mark.parametrize("p1", [0.0, 1.0])
    def test_needs_a_proper_stretch_probability(self, p1):
        dist = OffspringDistribution.from_mapping({1: p1, 2: 1.0 - p1})
        with pytest.raises(DomainError):
            sample_tree_decomposed(dist, SEED, 5)

    def test_unknown_vertex(self):
        tree = sample_tree_decomposed(OffspringDistribution.from_mapping({1: 0.5, 2: 0.5}), SEED, 5)
        with pytest.raises(DomainError):
            tree.children((7, 7))


class TestStretches:
    def test_labels_on_a_hand_built_tree(self):
        tree = tree_with_stretches([3, 1])
        stretches = label_stretches(tree, horizon=8)
        labels = stretches.labels
        assert labels[()] == VertexLabel.NODE
        assert labels[(0,)] == VertexLabel.BEGIN_STRETCH
        assert labels[(0, 0)] == VertexLabel.STRETCH
        assert labels[(0, 0, 0)] == VertexLabel.END_STRETCH
        # A one-vertex stretch both begins and ends; it is labeled as a beginning.
        assert labels[(1,)] == VertexLabel.BEGIN_STRETCH
        assert labels[(2,)] == VertexLabel.NODE
        assert stretches.lengths() == [1, 3]
        assert stretches.by_start[(0,)].end == (0, 0, 0)
        assert stretches.by_end[(1,)].start == (1,)

    def test_root_is_never_a_stretch_vertex(self):
        tree = ExplicitTree({(): ((0,),), (0,): ((0, 0), (0, 1))})
        assert label_stretches(tree, horizon=5).labels[()] == VertexLabel.NODE

    def test_ray_past_the_horizon_stays_unlabeled(self):
        """Whether the run ends below the horizon is unknown, so no stretch is reported."""
        tree = sample_tree(OffspringDistribution.point(1), SEED, depth_horizon=5)
        stretches = label_stretches(tree, horizon=5)
        assert stretches.stretches == ()
        assert stretches.labels[(0, 0, 0, 0)] == VertexLabel.UNLABELED
        assert stretches.labels[(0, 0, 0, 0, 0)] == VertexLabel.UNLABELED
        assert stretches.labels[(0,)] == VertexLabel.BEGIN_STRETCH

    def test_labels_land_on_the_tree(self):
        tree = tree_with_stretches([2])
        label_stretches(tree, horizon=8)
        assert tree.labels[(0, 0)] == VertexLabel.END_STRETCH

    def test_truncation_shortens_long_stretches_only(self):
        tree = tree_with_stretches([5, 2])
        truncated = truncate_stretches(tree, label_stretches(tree, horizon=10), 3)
        assert len(truncated.vertices) == len(list(tree.walk(10))) - 2
        assert truncated.children((0, 0, 0)) == ((0, 0, 0, 0, 0, 0),)
        assert label_stretches(truncated, horizon=10).lengths() == [2, 3]

    def test_truncation_keeps_frog_counts(self):
        tree = tree_with_stretches([5])
        truncated = truncate_stretches(tree, label_stretches(tree, horizon=10), 2)
        init = FrogInit.from_mapping({0: 0.5, 3: 0.5})
        for v in truncated.vertices:
            assert truncated.frog_count(v, init) == tree.frog_count(v, init)

    def test_truncation_is_idempotent(self):
        tree = tree_with_stretches([5, 2, 1])
        once = truncate_stretches(tree, label_stretches(tree, horizon=10), 3)
        twice = truncate_stretches(once, label_stretches(once, horizon=10), 3)
        assert twice.edges() == once.edges()
        assert label_stretches(twice, horizon=10).labels == label_stretches(once, horizon=10).labels
        init = FrogInit.from_mapping({0: 0.5, 3: 0.5})
        assert [twice.frog_count(v, init) for v in twice.vertices] == [
            once.frog_count(v, init) for v in once.vertices
        ]

    def test_truncation_length_must_be_positive(self):
        tree = tree_with_stretches([2])
        with pytest.raises(DomainError):
            truncate_stretches(tree, label_stretches(tree, horizon=8), 0)


class TestBushErasure:
    def test_frog_mass_is_conserved(self, quarter):
        init = FrogInit.from_mapping({0: 0.5, 1: 0.3, 2: 0.2})
        tree = sample_surviving_tree(quarter, SEED, depth_horizon=8)
        total = sum(tree.frog_count(v, init) for v in tree.walk(8))
        erased, masses = erase_bushes(tree, 8, init)
        assert sum(masses.values()) == total
        assert set(masses) == set(erased.vertices)

    def test_backbone_vertices_all_continue(self, quarter):
        tree = sample_surviving_tree(quarter, SEED, depth_horizon=8)
        erased, _ = erase_bushes(tree, 8)
        for v in erased.vertices:
            assert erased.labels[v] == VertexLabel.BACKBONE
            if erased.depth(v) < 8:
                assert erased.children(v)

    def test_bush_labels_on_the_source_tree(self, quarter):
        tree = sample_surviving_tree(quarter, SEED, depth_horizon=8)
        erased, _ = erase_bushes(tree, 8)
        kept = set(erased.vertices)
        for v in tree.walk(8):
            if v in kept:
                continue
            expected = VertexLabel.BUSH_ROOT if tree.parent(v) in kept else VertexLabel.BUSH
            assert tree.labels[v] == expected

    def _tree_with_one_bush(self) -> ExplicitTree:
        children = {(): ((0,), (1,)), (1,): ((1, 0),)}
        run = path_below((0,), 3)
        for a, b in zip(run, run[1:]):
            children[a] = (b,)
        return ExplicitTree(children)

    def test_bush_mass_moves_to_its_attachment(self):
        erased, masses = erase_bushes(self._tree_with_one_bush(), 3, bush_cap=2)
        assert masses[()] == 3
        assert erased.children(()) == ((0,),)

    def test_bush_cap_is_an_error(self):
        with pytest.raises(BushCapExceeded) as info:
            erase_bushes(self._tree_with_one_bush(), 3, bush_cap=1)
        assert info.value.vertex == (1,)

    def test_tree_that_dies_above_the_horizon(self):
        with pytest.raises(DomainError):
            erase_bushes(tree_with_stretches([2]), 20)


class TestExplicitTree:
    def test_from_edges(self):
        tree = ExplicitTree.from_edges([((), (0,)), ((), (1,)), ((0,), (0, 0))])
        assert tree.vertices == ((), (0,), (1,), (0, 0))
        assert tree.degree(()) == 2
        assert tree.degree((0,)) == 2
        assert tree.neighbors((0,)) == ((), (0, 0))

    def test_two_parents(self):
        with pytest.raises(DomainError):
            ExplicitTree({(): ((0,), (1,)), (0,): ((5,),), (1,): ((5,),)})

    def test_disconnected_vertex(self):
        with pytest.raises(DomainError):
            ExplicitTree({(): ((0,),), (7,): ((7, 0),)})
