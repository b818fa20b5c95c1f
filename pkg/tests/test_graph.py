"""
Tests for constrained graph construction
"""

import math

import numpy as np
import pytest

from app.core.errors import NoLabeledSamplesError, UsageError
from app.schemas.dataset import Dataset
from app.schemas.graph import GraphConfig
from app.services.graph_service import (
    build_constrained_graph, build_tree, export_graph, gaussian_weights, theta_bar
)


def labeled_fixture(seed: int) -> Dataset:
    rng = np.random.default_rng(seed)
    samples = rng.uniform(0.0, 1.0, size=(40, 2))
    truth = rng.integers(1, 4, size=40)
    truth[:3] = [1, 2, 3]
    labels = np.where(rng.uniform(size=40) < 0.3, truth, 0)
    labels[:3] = [1, 2, 3]
    return Dataset.from_arrays(samples, labels, truth=truth)


def pair_at_half(symmetric: bool = False):
    """A labeled root and one unlabeled point whose kernel weight is 0.5"""
    sigma = 0.3
    gap = sigma * math.sqrt(2.0 * math.log(2.0))
    ds = Dataset.from_arrays([[0.0, 0.0], [gap, 0.0]], [1, 0])
    cfg = GraphConfig(sigma=sigma, tree_depth=1, tree_branch=1, symmetric_strengthening=symmetric)
    return ds, cfg


class TestGaussianWeights:
    def test_symmetric_with_zero_diagonal(self, rng):
        w = gaussian_weights(rng.normal(size=(20, 3)), sigma=0.7)
        assert np.array_equal(w, w.T)
        assert np.all(np.diag(w) == 0.0)
        assert np.all((w >= 0) & (w <= 1))

    def test_kernel_value(self):
        w = gaussian_weights(np.array([[0.0, 0.0], [3.0, 4.0]]), sigma=5.0)
        assert w[0, 1] == pytest.approx(math.exp(-25.0 / 50.0))

    def test_self_loops_keep_diagonal(self, rng):
        w = gaussian_weights(rng.normal(size=(5, 2)), sigma=1.0, self_loops=True)
        assert np.all(np.diag(w) == 1.0)

    def test_coincident_points(self):
        w = gaussian_weights(np.array([[1.0, 1.0], [1.0, 1.0]]), sigma=0.1)
        assert w[0, 1] == 1.0

    def test_sigma_must_be_positive(self):
        with pytest.raises(UsageError):
            gaussian_weights(np.zeros((2, 2)), sigma=0.0)


class TestTheta:
    def test_bound_values(self):
        assert theta_bar(0.5) == 1.0
        assert theta_bar(0.8) == pytest.approx(0.25)
        assert theta_bar(0.1) == 1.0
        assert theta_bar(1.0) == 0.0

    @pytest.mark.parametrize("w", [0.0, -0.2, 1.5])
    def test_undefined(self, w):
        with pytest.raises(ValueError):
            theta_bar(w)


class TestBuildTree:
    def line(self):
        samples = np.column_stack([np.arange(6, dtype=float), np.zeros(6)])
        return Dataset.from_arrays(samples, [1, 0, 0, 0, 0, 0])

    def test_levels_skip_ancestors(self):
        tree = build_tree(self.line(), root=0, depth=2, branch=2)
        assert tree.levels == [[0], [1, 2], [3]]
        assert (2, 3, 2) in tree.edges
        assert tree.depth == 2

    def test_branch_one_stops_when_exhausted(self):
        # node 1's nearest neighbor is its parent, so level 2 stays empty
        tree = build_tree(self.line(), root=0, depth=3, branch=1)
        assert tree.levels == [[0], [1]]

    def test_first_parent_wins(self):
        samples = np.array([[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 1.5]])
        ds = Dataset.from_arrays(samples, [1, 0, 0, 0])
        tree = build_tree(ds, root=0, depth=2, branch=2)
        assert tree.levels == [[0], [1, 2], [3]]
        assert (1, 3, 2) in tree.edges
        assert (2, 3, 2) not in tree.edges

    def test_root_must_be_labeled(self):
        with pytest.raises(UsageError):
            build_tree(self.line(), root=2, depth=1, branch=1)

    def test_depth_at_least_one(self):
        with pytest.raises(UsageError):
            build_tree(self.line(), root=0, depth=0, branch=1)


class TestConstrainedGraph:
    @pytest.mark.parametrize("seed", range(10))
    def test_constraint_dominance(self, seed):
        ds = labeled_fixture(seed)
        graph = build_constrained_graph(ds, GraphConfig(sigma=0.5, tree_branch=3))
        w = graph.weights
        labeled = ds.labeled_indices
        y = ds.labels[labeled]

        assert np.array_equal(w, w.T)
        block = w[np.ix_(labeled, labeled)]
        same = y[:, None] == y[None, :]
        off_diagonal = ~np.eye(labeled.size, dtype=bool)
        assert np.all(block[same & off_diagonal] == 1.0)
        assert np.all(block[~same] == 0.0)

        constrained = np.zeros_like(w, dtype=bool)
        constrained[np.ix_(labeled, labeled)] = True
        free = ~constrained & ~np.eye(ds.n, dtype=bool)
        assert np.all((w[free] > 0) & (w[free] < 1))
        assert np.all(np.diag(w) == 0.0)

    def test_strengthening_averaged(self):
        ds, cfg = pair_at_half()
        w = build_constrained_graph(ds, cfg).weights
        assert w[0, 1] == pytest.approx(0.525)
        assert w[1, 0] == w[0, 1]

    def test_symmetric_strengthening(self):
        ds, cfg = pair_at_half(symmetric=True)
        w = build_constrained_graph(ds, cfg).weights
        assert w[0, 1] == pytest.approx(0.55)

    def test_boost_decays_with_level(self):
        # unit-spaced line scaled so neighboring weights are 0.5; (0, 1) is a level-1 edge, (2, 3) a level-2 edge
        sigma = 0.3
        gap = sigma * math.sqrt(2.0 * math.log(2.0))
        samples = np.column_stack([gap * np.arange(6, dtype=float), np.zeros(6)])
        ds = Dataset.from_arrays(samples, [1, 0, 0, 0, 0, 0])
        cfg = GraphConfig(sigma=sigma, tree_depth=2, tree_branch=2, symmetric_strengthening=True)
        graph = build_constrained_graph(ds, cfg)

        assert (0, 1, 1) in graph.trees[0].edges
        assert (2, 3, 2) in graph.trees[0].edges
        level_one = graph.weights[0, 1] / 0.5
        level_two = graph.weights[2, 3] / 0.5
        assert level_one == pytest.approx(1.1)
        assert level_two == pytest.approx(1.01)
        assert level_one > level_two > 1.0

    def test_no_trees_means_plain_kernel(self, two_arcs_split):
        cfg = GraphConfig(sigma=0.2, tree_depth=0)
        graph = build_constrained_graph(two_arcs_split, cfg)
        kernel = gaussian_weights(two_arcs_split, 0.2)
        unlabeled = two_arcs_split.unlabeled_indices
        assert np.array_equal(graph.weights[np.ix_(unlabeled, unlabeled)], kernel[np.ix_(unlabeled, unlabeled)])
        assert graph.trees == []

    def test_strengthening_only_raises_weights(self, two_arcs_split):
        plain = build_constrained_graph(two_arcs_split, GraphConfig(sigma=0.2, tree_depth=0)).weights
        strong = build_constrained_graph(two_arcs_split, GraphConfig(sigma=0.2, tree_branch=3)).weights
        assert np.all(strong >= plain)
        assert np.any(strong > plain)

    def test_one_tree_per_labeled_sample(self, two_arcs_split):
        graph = build_constrained_graph(two_arcs_split, GraphConfig(sigma=0.2, tree_branch=3))
        assert [t.root for t in graph.trees] == two_arcs_split.labeled_indices.tolist()

    def test_deterministic(self, two_arcs_split):
        cfg = GraphConfig(sigma=0.2, tree_branch=3)
        a = build_constrained_graph(two_arcs_split, cfg).weights
        b = build_constrained_graph(two_arcs_split, cfg).weights
        assert np.array_equal(a, b)

    def test_sparsity_threshold(self, two_arcs_split):
        cfg = GraphConfig(sigma=0.2, tree_branch=3, sparsity_threshold=1e-3)
        w = build_constrained_graph(two_arcs_split, cfg).weights
        nonzero = w[w > 0]
        assert nonzero.min() >= 1e-3

    def test_needs_labels(self):
        ds = Dataset.from_arrays([[0.0], [1.0]], [0, 0], class_names=["a"])
        with pytest.raises(NoLabeledSamplesError):
            build_constrained_graph(ds, GraphConfig(sigma=1.0))

    def test_export(self, tmp_path, two_arcs_split):
        graph = build_constrained_graph(two_arcs_split, GraphConfig(sigma=0.2, tree_branch=3))
        path = export_graph(graph, tmp_path / "w.csv")
        rows = path.read_text().splitlines()
        assert len(rows) == two_arcs_split.n
        assert np.array_equal(np.array([float(v) for v in rows[0].split(",")]), graph.weights[0])
