"""
Tuning Service
Grid search scored by stratified k-fold cross validation over the labeled set
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional

import numpy as np

from app.core.config import settings
from app.core.errors import NumericalError, UsageError
from app.schemas.classify import ALGORITHMS, AlgorithmParams, GridScore, TuneGrid, TuneResult
from app.schemas.dataset import Dataset
from app.services.classify_service import predict

logger = logging.getLogger(__name__)

# grid axes each algorithm reads; the others are pinned to their first value
RELEVANT_AXES = {
    "knn": (),
    "wknn": (),
    "gknn": ("geo_neighbors",),
    "mknn": ("sigma", "alpha"),
}


def stratified_folds(ds: Dataset, folds: int, seed: int) -> np.ndarray:
    """
    Fold id per labeled index (aligned with ds.labeled_indices)

    Each class's labeled members are shuffled by one generator seeded with
    ``seed`` and dealt round-robin, so every fold sees every class.
    """
    labeled = ds.labeled_indices
    classes = ds.labels[labeled]
    rng = np.random.default_rng(seed)
    assignment = np.empty(labeled.size, dtype=np.int64)
    for c in range(1, ds.n_classes + 1):
        members = np.flatnonzero(classes == c)
        if members.size == 0:
            continue
        if members.size < folds:
            raise UsageError(
                f"class {ds.class_names[c - 1]!r} has {members.size} labeled samples; "
                f"{folds}-fold cross validation needs at least {folds}"
            )
        assignment[rng.permutation(members)] = np.arange(members.size) % folds
    return assignment


def grid_points(algorithm: str, grid: TuneGrid, base: AlgorithmParams) -> List[AlgorithmParams]:
    """Grid points in declared order (sigma outermost, geo_neighbors innermost)"""
    relevant = RELEVANT_AXES[algorithm]
    axes = {
        "sigma": grid.sigma_values,
        "alpha": grid.alpha_values,
        "geo_neighbors": grid.geo_neighbors_values,
    }
    for name in axes:
        if name not in relevant:
            axes[name] = axes[name][:1]
    return [
        base.model_copy(update={"sigma": s, "alpha": a, "geo_neighbors": g})
        for s, a, g in itertools.product(axes["sigma"], axes["alpha"], axes["geo_neighbors"])
    ]


def cross_validation_error(ds: Dataset, algorithm: str, params: AlgorithmParams, assignment: np.ndarray) -> float:
    """
    Error on held-out labeled points, pooled over folds

    Held-out labels are hidden from the fit; every sample still takes part in
    graph construction.
    """
    labeled = ds.labeled_indices
    folds = int(assignment.max()) + 1
    mistakes = 0
    for f in range(folds):
        hidden = labeled[assignment == f]
        train_labels = ds.labels.copy()
        train_labels[hidden] = 0
        train = ds.with_labels(train_labels)
        fold_params = params.model_copy(update={"k": min(params.k, train.l)})
        predictions = predict(train, algorithm, fold_params)
        mistakes += int(np.count_nonzero(predictions[hidden] != ds.labels[hidden]))
    return mistakes / labeled.size


def tune(
    ds: Dataset,
    algorithm: str,
    grid: TuneGrid,
    seed: int,
    base_params: Optional[AlgorithmParams] = None,
    workers: Optional[int] = None
) -> TuneResult:
    """
    Pick the grid point with the lowest cross-validation error

    Args:
        ds: dataset with its working labels; unlabeled rows stay in every fit
        algorithm: one of knn, wknn, gknn, mknn
        grid: values searched
        seed: fold assignment seed
        base_params: parameters not covered by the grid (k, tree settings)
        workers: thread count for grid points; defaults to settings.WORKERS

    Returns:
        TuneResult; ties go to the first grid point in declared order
    """
    if algorithm not in ALGORITHMS:
        raise UsageError(f"unknown algorithm {algorithm!r}")
    base_params = base_params or AlgorithmParams()
    points = grid_points(algorithm, grid, base_params)
    if not points:
        raise UsageError("empty tuning grid")
    assignment = stratified_folds(ds, grid.folds, seed)

    def score(params: AlgorithmParams) -> GridScore:
        try:
            error = cross_validation_error(ds, algorithm, params, assignment)
        except NumericalError as e:
            logger.warning(f"{algorithm} grid point sigma={params.sigma} alpha={params.alpha} failed: {e}")
            error = 1.0
        logger.debug(
            f"{algorithm} sigma={params.sigma} alpha={params.alpha} "
            f"geo={params.geo_neighbors}: cv error {error:.4f}"
        )
        return GridScore(params=params, error=error)

    workers = workers or settings.WORKERS
    if workers > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scores = list(pool.map(score, points))
    else:
        scores = [score(p) for p in points]

    best_index = int(np.argmin([s.error for s in scores]))
    best = scores[best_index]
    logger.info(f"Tuned {algorithm} over {len(points)} grid points: best error {best.error:.4f}")
    return TuneResult(algorithm=algorithm, best=best.params, best_error=best.error, scores=scores)
