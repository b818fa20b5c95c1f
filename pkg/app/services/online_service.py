"""
Online Service
Sequential mkNN: classify unseen samples against a frozen fitted model by
local reconstruction instead of recomputing the TRW matrix
"""

import logging
import threading
import time
from pathlib import Path
from typing import Iterator, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.spatial.distance import cdist

from app.core.config import settings
from app.core.errors import DataError, DimensionError, ParseError, UsageError
from app.schemas.classify import MknnModel
from app.schemas.dataset import Dataset
from app.schemas.graph import GraphConfig
from app.schemas.online import OnlineResult, OnlineStats
from app.services.classify_service import labeled_scores
from app.services.optimize_service import reconstruct_weights, solve_simplex_lsq
from app.services.trw_service import load_model

logger = logging.getLogger(__name__)


class OnlineSession:
    """
    Wraps a fitted mkNN model for streaming classification.

    The model is shared read-only; concurrent ``classify_online`` calls are
    safe and only the counters are guarded.
    """

    def __init__(self, model: MknnModel, k_recon: Optional[int] = None, full_rows: bool = False):
        if model.dataset.n == 0:
            raise DataError("online session needs a fitted model with samples")
        self.model = model
        self.k_recon = k_recon or model.k
        if self.k_recon < 1:
            raise UsageError("k_recon must be at least 1")
        self.k_recon = min(self.k_recon, model.dataset.n)
        self.full_rows = full_rows
        self._labeled = model.dataset.labeled_indices
        self._lock = threading.Lock()
        self._stats = OnlineStats()

    @classmethod
    def from_dump(
        cls,
        path: Union[str, Path],
        dataset: Dataset,
        k: int,
        graph_config: Optional[GraphConfig] = None,
        **kwargs
    ) -> "OnlineSession":
        """Session over a TRW model saved with ``save_model`` and the dataset it was fitted on"""
        model = MknnModel(
            trw=load_model(path),
            dataset=dataset,
            k=k,
            graph_config=graph_config or GraphConfig(sigma=settings.DEFAULT_SIGMA)
        )
        logger.info(f"Loaded fitted model for {dataset.name} from {path}")
        return cls(model, **kwargs)

    @property
    def stats(self) -> OnlineStats:
        with self._lock:
            return self._stats.model_copy()

    def _record(self, elapsed: float):
        with self._lock:
            self._stats = OnlineStats(
                points_classified=self._stats.points_classified + 1,
                cumulative_seconds=self._stats.cumulative_seconds + elapsed
            )

    def classify_online(self, x) -> OnlineResult:
        """
        Classify one new sample

        Steps: k_recon Euclidean neighbors in the fitted set, simplex
        reconstruction coefficients z, w = W_k^T z over the neighbors' TRW
        rows, then the weighted vote over the k largest labeled weights.
        """
        start = time.perf_counter()
        ds = self.model.dataset
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (ds.d,):
            raise DimensionError(f"sample has shape {x.shape}, expected ({ds.d},)")
        if not np.all(np.isfinite(x)):
            raise DataError("online sample contains non-finite values")

        dist = cdist(x[None, :], ds.samples)[0]
        neighbors = np.argsort(dist, kind="stable")[:self.k_recon]

        z, report = solve_simplex_lsq(x, ds.samples[neighbors].T)

        rows = self.model.trw.sym_weights[neighbors]
        if self.full_rows:
            weights = reconstruct_weights(rows, z)[self._labeled]
        else:
            weights = reconstruct_weights(rows[:, self._labeled], z)

        predicted, scores = labeled_scores(self.model, weights)
        elapsed = time.perf_counter() - start
        self._record(elapsed)

        return OnlineResult(
            predicted_class=predicted,
            weights_to_labeled=weights,
            scores=scores,
            recon_error=max(report.objective, 0.0),
            z=z,
            neighbors=neighbors,
            elapsed_seconds=elapsed
        )

    def batch_online(self, xs: Sequence) -> Tuple[List[OnlineResult], List[float]]:
        """Classify each sample against the frozen model; returns results and per-point seconds"""
        results = []
        timings = []
        for x in xs:
            result = self.classify_online(x)
            results.append(result)
            timings.append(result.elapsed_seconds)
        if results:
            logger.debug(f"Online batch of {len(results)} points in {sum(timings):.4f}s")
        return results, timings

    def classify_csv(self, path: Union[str, Path], chunk_rows: int = 1024) -> Iterator[OnlineResult]:
        """Stream feature rows (no label column, no header) from a CSV file"""
        for x in read_stream(path, chunk_rows):
            yield self.classify_online(x)


def read_stream(path: Union[str, Path], chunk_rows: int = 1024) -> Iterator[np.ndarray]:
    """Yield one float row at a time from a headerless CSV, reading in chunks"""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path} does not exist")
    row = 0
    try:
        for chunk in pd.read_csv(path, header=None, chunksize=chunk_rows, dtype=np.float64):
            for values in chunk.to_numpy():
                row += 1
                yield values
    except pd.errors.EmptyDataError:
        return
    except (ValueError, UnicodeDecodeError, pd.errors.ParserError) as e:
        raise ParseError(f"malformed stream row in {path.name}: {e}", row + 1)


def reconstruct_leave_one_out(
    model: MknnModel,
    k: int,
    columns: Literal["labeled", "all"] = "all"
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Rebuild every sample and its TRW weight row from its k nearest other samples

    Returns:
        (X_hat, true weights, reconstructed weights). The weight matrices cover
        all n columns, or only the labeled ones with ``columns="labeled"``.
        Entries pairing a row with itself or with one of its reconstruction
        neighbors are zeroed in both: those columns hold diagonal P_TRW mass.
    """
    ds = model.dataset
    if not 1 <= k < ds.n:
        raise UsageError(f"k must lie in [1, n-1] for leave-one-out, got {k}")
    cols = ds.labeled_indices if columns == "labeled" else np.arange(ds.n)
    position = {int(c): j for j, c in enumerate(cols)}

    sym = model.trw.sym_weights
    dist = cdist(ds.samples, ds.samples)
    np.fill_diagonal(dist, np.inf)
    order = np.argsort(dist, axis=1, kind="stable")[:, :k]

    x_hat = np.empty_like(ds.samples)
    truth = sym[:, cols].copy()
    recon = np.empty_like(truth)
    for i in range(ds.n):
        neighbors = order[i]
        z, _ = solve_simplex_lsq(ds.samples[i], ds.samples[neighbors].T)
        x_hat[i] = ds.samples[neighbors].T @ z.z
        recon[i] = reconstruct_weights(sym[np.ix_(neighbors, cols)], z)

        masked = [position[j] for j in (i, *map(int, neighbors)) if j in position]
        truth[i, masked] = 0.0
        recon[i, masked] = 0.0

    logger.info(f"Leave-one-out reconstruction of {ds.n} samples with k={k}")
    return x_hat, truth, recon
