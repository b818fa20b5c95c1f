"""
Classify Service
mkNN over tired-random-walk weights and the kNN / wkNN / gkNN baselines
"""

import logging
from typing import Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import dijkstra
from scipy.spatial.distance import cdist

from app.core.errors import NoLabeledSamplesError, UsageError
from app.schemas.classify import AlgorithmParams, MknnModel
from app.schemas.dataset import Dataset
from app.schemas.graph import GraphConfig
from app.schemas.trw import TrwConfig
from app.services.graph_service import build_constrained_graph
from app.services.metrics_service import error_rate
from app.services.trw_service import fit_trw

logger = logging.getLogger(__name__)

WKNN_EPSILON = 1e-12


def vote(neighbor_classes: np.ndarray, neighbor_weights: np.ndarray, n_classes: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Weighted class vote per row

    Args:
        neighbor_classes: m x k class ids (1..C)
        neighbor_weights: m x k vote weights
        n_classes: C

    Returns:
        (winning class per row, m x C score matrix); ties go to the smallest class
    """
    scores = np.zeros((neighbor_classes.shape[0], n_classes))
    for c in range(1, n_classes + 1):
        scores[:, c - 1] = np.where(neighbor_classes == c, neighbor_weights, 0.0).sum(axis=1)
    return np.argmax(scores, axis=1) + 1, scores


def _require_labels(ds: Dataset, k: int):
    if ds.l == 0:
        raise NoLabeledSamplesError()
    if k > ds.l:
        raise UsageError(f"k={k} exceeds the number of labeled samples l={ds.l}")


# ---------------------------------------------------------------------------
# mkNN
# ---------------------------------------------------------------------------

def fit_mknn(ds: Dataset, gcfg: GraphConfig, tcfg: TrwConfig, k: int) -> MknnModel:
    """Build the constrained graph and P_TRW over every sample (transductive fit)"""
    _require_labels(ds, k)
    if gcfg.tree_branch is None:
        gcfg = gcfg.model_copy(update={"tree_branch": k})

    graph = build_constrained_graph(ds, gcfg)
    trw = fit_trw(graph, tcfg)
    logger.debug(f"Fitted mkNN on {ds.name}: n={ds.n} l={ds.l} k={k}")
    return MknnModel(trw=trw, dataset=ds, k=k, graph_config=gcfg)


def labeled_scores(model: MknnModel, weights_to_labeled: np.ndarray) -> Tuple[int, np.ndarray]:
    """Vote with the k largest weights to labeled samples (ties to the lowest index)"""
    labeled = model.dataset.labeled_indices
    top = np.argsort(-weights_to_labeled, kind="stable")[:model.k]
    classes = model.dataset.labels[labeled[top]]
    winner, scores = vote(classes[None, :], weights_to_labeled[top][None, :], model.dataset.n_classes)
    return int(winner[0]), scores[0]


def classify_point(model: MknnModel, idx: int) -> Tuple[int, np.ndarray]:
    """
    Classify one unlabeled sample of the fitted set

    Returns:
        (class, per-class sums of the k largest TRW weights to labeled samples)
    """
    ds = model.dataset
    if not 0 <= idx < ds.n:
        raise UsageError(f"index {idx} outside the fitted set of {ds.n} samples")
    if ds.labels[idx] != 0:
        raise UsageError(f"sample {idx} is labeled")
    weights = model.trw.sym_weights[idx, ds.labeled_indices]
    return labeled_scores(model, weights)


def classify_all(model: MknnModel) -> Tuple[np.ndarray, Optional[float]]:
    """
    Label every unlabeled sample

    Returns:
        (full-length label vector, error rate over the unlabeled samples or
        None when no ground truth is carried)
    """
    ds = model.dataset
    labeled = ds.labeled_indices
    unlabeled = ds.unlabeled_indices
    predictions = ds.labels.copy()
    if unlabeled.size == 0:
        return predictions, None

    weights = model.trw.sym_weights[np.ix_(unlabeled, labeled)]
    top = np.argsort(-weights, axis=1, kind="stable")[:, :model.k]
    classes = ds.labels[labeled][top]
    winners, _ = vote(classes, np.take_along_axis(weights, top, axis=1), ds.n_classes)
    predictions[unlabeled] = winners

    error = None
    if ds.truth is not None:
        error = error_rate(predictions[unlabeled], ds.truth[unlabeled])
    return predictions, error


# ---------------------------------------------------------------------------
# Baselines
# ---------------------------------------------------------------------------

def _euclidean_vote(ds: Dataset, queries: np.ndarray, k: int, weighted: bool) -> np.ndarray:
    labeled = ds.labeled_indices
    dist = cdist(ds.samples[queries], ds.samples[labeled])
    top = np.argsort(dist, axis=1, kind="stable")[:, :k]
    nearest = np.take_along_axis(dist, top, axis=1)
    weights = 1.0 / (nearest + WKNN_EPSILON) if weighted else np.ones_like(nearest)
    winners, _ = vote(ds.labels[labeled][top], weights, ds.n_classes)
    return winners


def knn_baseline(ds: Dataset, k: int) -> np.ndarray:
    """Euclidean majority vote over the labeled samples"""
    _require_labels(ds, k)
    predictions = ds.labels.copy()
    unlabeled = ds.unlabeled_indices
    if unlabeled.size:
        predictions[unlabeled] = _euclidean_vote(ds, unlabeled, k, weighted=False)
    return predictions


def wknn_baseline(ds: Dataset, k: int) -> np.ndarray:
    """Votes weighted by inverse distance 1 / (d + 1e-12)"""
    _require_labels(ds, k)
    predictions = ds.labels.copy()
    unlabeled = ds.unlabeled_indices
    if unlabeled.size:
        predictions[unlabeled] = _euclidean_vote(ds, unlabeled, k, weighted=True)
    return predictions


def geodesic_graph(samples: np.ndarray, geo_neighbors: int) -> sparse.csr_matrix:
    """Symmetric geo_neighbors-NN graph with Euclidean edge lengths"""
    n = samples.shape[0]
    dist = cdist(samples, samples)
    np.fill_diagonal(dist, np.inf)
    m = min(geo_neighbors, n - 1)
    nbrs = np.argsort(dist, axis=1, kind="stable")[:, :m]
    rows = np.repeat(np.arange(n), m)
    cols = nbrs.ravel()
    # coincident points still need an edge; csgraph ignores zero-length entries
    lengths = np.maximum(dist[rows, cols], np.finfo(float).tiny)
    graph = sparse.csr_matrix((lengths, (rows, cols)), shape=(n, n))
    return graph.maximum(graph.T).tocsr()


def geodesic_distances(samples: np.ndarray, sources: np.ndarray, geo_neighbors: int) -> np.ndarray:
    """Shortest-path lengths from each source to every sample (inf when disconnected)"""
    return dijkstra(geodesic_graph(samples, geo_neighbors), directed=False, indices=sources)


def gknn_baseline(ds: Dataset, k: int, geo_neighbors: int) -> np.ndarray:
    """
    kNN majority vote with geodesic distances on the neighbor graph

    Labeled samples in another connected component are excluded from the
    vote; a query that reaches no labeled sample falls back to Euclidean kNN.
    """
    _require_labels(ds, k)
    predictions = ds.labels.copy()
    unlabeled = ds.unlabeled_indices
    if unlabeled.size == 0:
        return predictions

    labeled = ds.labeled_indices
    geo = geodesic_distances(ds.samples, labeled, geo_neighbors)[:, unlabeled].T
    label_of = ds.labels[labeled]

    fallback = []
    for row, query in enumerate(unlabeled):
        reachable = np.flatnonzero(np.isfinite(geo[row]))
        if reachable.size == 0:
            fallback.append(query)
            continue
        order = reachable[np.argsort(geo[row, reachable], kind="stable")][:k]
        winner, _ = vote(label_of[order][None, :], np.ones((1, order.size)), ds.n_classes)
        predictions[query] = winner[0]

    if fallback:
        logger.debug(f"gkNN: {len(fallback)} queries reach no labeled sample, using Euclidean kNN")
        predictions[fallback] = _euclidean_vote(ds, np.asarray(fallback), k, weighted=False)
    return predictions


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

def predict(ds: Dataset, algorithm: str, params: AlgorithmParams) -> np.ndarray:
    """Full-length label vector from the named algorithm"""
    if algorithm == "knn":
        return knn_baseline(ds, params.k)
    if algorithm == "wknn":
        return wknn_baseline(ds, params.k)
    if algorithm == "gknn":
        return gknn_baseline(ds, params.k, params.geo_neighbors)
    if algorithm == "mknn":
        model = fit_mknn(ds, params.graph_config(), params.trw_config(), params.k)
        predictions, _ = classify_all(model)
        return predictions
    raise UsageError(f"unknown algorithm {algorithm!r}")
