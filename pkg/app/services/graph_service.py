"""
Graph Service
Constrained graph construction: Gaussian kernel, must-link / cannot-link
overrides and R-level nearest-neighbor strengthened trees
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd
from scipy.spatial.distance import cdist

from app.core.config import settings
from app.core.errors import DataError, NoLabeledSamplesError, NumericalError, UsageError
from app.schemas.dataset import Dataset
from app.schemas.graph import ConstrainedGraph, GraphConfig, StrengthenedTree
from app.services.report_service import atomic_write_text

logger = logging.getLogger(__name__)

# Largest double below 1; strengthened entries never reach the must-link weight
_BELOW_ONE = np.nextafter(1.0, 0.0)


def check_dense_size(n: int):
    """Refuse n x n allocations beyond the configured limit"""
    if n > settings.MAX_DENSE_N:
        raise DataError(
            f"n={n} exceeds MAX_DENSE_N={settings.MAX_DENSE_N}; dense n x n matrices are required"
        )


def gaussian_weights(ds: Union[Dataset, np.ndarray], sigma: float, self_loops: bool = False) -> np.ndarray:
    """W_ij = exp(-||x_i - x_j||^2 / 2 sigma^2), exactly symmetric"""
    if sigma <= 0:
        raise UsageError("sigma must be positive")
    samples = ds.samples if isinstance(ds, Dataset) else np.asarray(ds, dtype=np.float64)
    check_dense_size(samples.shape[0])

    sq = cdist(samples, samples, "sqeuclidean")
    if not np.all(np.isfinite(sq)):
        raise NumericalError("non-finite pairwise distances")

    weights = np.exp(-sq / (2.0 * sigma * sigma))
    # mirror the upper triangle so W == W.T bit for bit
    weights = np.triu(weights) + np.triu(weights, 1).T
    if not self_loops:
        np.fill_diagonal(weights, 0.0)
    return weights


class NeighborIndex:
    """Exact Euclidean nearest neighbors over all samples, ties to the lowest index"""

    def __init__(self, samples: np.ndarray):
        self.samples = samples
        self._cache: Dict[int, np.ndarray] = {}

    def order(self, i: int) -> np.ndarray:
        """All other indices sorted by distance from sample i"""
        if i not in self._cache:
            dist = cdist(self.samples[i:i + 1], self.samples)[0]
            dist[i] = np.inf
            self._cache[i] = np.argsort(dist, kind="stable")[:-1]
        return self._cache[i]

    def nearest(self, i: int, k: int) -> np.ndarray:
        return self.order(i)[:k]


def build_tree(
    ds: Dataset,
    root: int,
    depth: int,
    branch: int,
    index: Optional[NeighborIndex] = None
) -> StrengthenedTree:
    """
    Grow the strengthened tree of a labeled sample

    Level 0 holds the root. Each node of level r-1 contributes its ``branch``
    nearest neighbors as level-r children; a child already present in an
    ancestor level is dropped, and a child already placed in level r keeps
    its first parent.
    """
    if ds.labels[root] == 0:
        raise UsageError(f"tree root {root} is not labeled")
    if depth < 1:
        raise UsageError("tree depth must be at least 1")
    if branch < 1:
        raise UsageError("tree branch must be at least 1")

    index = index or NeighborIndex(ds.samples)
    levels: List[List[int]] = [[root]]
    edges = []
    seen = {root}

    for r in range(1, depth + 1):
        level: List[int] = []
        placed = set()
        for parent in levels[r - 1]:
            for child in index.nearest(parent, branch):
                child = int(child)
                if child in seen or child in placed:
                    continue
                placed.add(child)
                level.append(child)
                edges.append((parent, child, r))
        if not level:
            break
        levels.append(level)
        seen |= placed

    return StrengthenedTree(root=int(root), levels=levels, edges=edges)


def theta_bar(w: float) -> float:
    """Upper bound min((1 - w) / w, 1) on the strengthening parameter"""
    if not 0 < w <= 1:
        raise UsageError(f"theta_bar is undefined for weight {w!r}; expected 0 < w <= 1")
    return min((1.0 - w) / w, 1.0)


def _constraint_block(labels: np.ndarray, labeled: np.ndarray) -> np.ndarray:
    y = labels[labeled]
    return (y[:, None] == y[None, :]).astype(np.float64)


def build_constrained_graph(ds: Dataset, cfg: GraphConfig) -> ConstrainedGraph:
    """
    Build W: kernel on all pairs, then must-link 1 / cannot-link 0 among
    labeled pairs, then tree strengthening, then symmetrization by averaging.

    Strengthening is directional (parent to child) by default, so averaging
    halves the boost: a level-1 edge of weight 0.5 with theta_fraction 0.1
    ends at 0.525. With ``symmetric_strengthening`` both directions are
    boosted and the same edge ends at 0.55.
    """
    labeled = ds.labeled_indices
    if labeled.size == 0:
        raise NoLabeledSamplesError()
    branch = cfg.tree_branch or settings.DEFAULT_K

    try:
        weights = gaussian_weights(ds, cfg.sigma, cfg.self_loops)

        constraints = _constraint_block(ds.labels, labeled)
        weights[np.ix_(labeled, labeled)] = constraints
        if not cfg.self_loops:
            np.fill_diagonal(weights, 0.0)

        trees: List[StrengthenedTree] = []
        if cfg.tree_depth > 0:
            index = NeighborIndex(ds.samples)
            factors = np.ones_like(weights)
            for root in labeled:
                tree = build_tree(ds, int(root), cfg.tree_depth, branch, index)
                trees.append(tree)
                for parent, child, level in tree.edges:
                    w = weights[parent, child]
                    # must-link (1) and cut (0) edges are never strengthened
                    if not 0 < w < 1:
                        continue
                    theta = cfg.theta_fraction * theta_bar(w)
                    factor = 1.0 + theta ** level
                    if factor > factors[parent, child]:
                        factors[parent, child] = factor
                    if cfg.symmetric_strengthening and factor > factors[child, parent]:
                        factors[child, parent] = factor

            strengthened = factors > 1.0
            weights = np.where(strengthened, np.minimum(weights * factors, _BELOW_ONE), weights)
            weights = (weights + weights.T) / 2.0

        np.clip(weights, 0.0, 1.0, out=weights)
        if cfg.sparsity_threshold > 0:
            weights[weights < cfg.sparsity_threshold] = 0.0
        weights[np.ix_(labeled, labeled)] = constraints
        if not cfg.self_loops:
            np.fill_diagonal(weights, 0.0)

    except (UsageError, DataError, NumericalError):
        raise
    except Exception as e:
        logger.error(f"Error building constrained graph: {e}")
        raise

    logger.debug(
        f"Constrained graph: n={ds.n} labeled={labeled.size} sigma={cfg.sigma} "
        f"depth={cfg.tree_depth} branch={branch}"
    )
    return ConstrainedGraph(weights=weights, config=cfg, trees=trees)


def export_graph(graph: ConstrainedGraph, path: Union[str, Path]) -> Path:
    """Dump W as a dense CSV matrix for debugging"""
    frame = pd.DataFrame(graph.weights).map(lambda v: repr(float(v)))
    return atomic_write_text(path, frame.to_csv(index=False, header=False, lineterminator="\n"))
