"""
Metrics Service
Error rate, relative reconstruction error and timing summaries
"""

import logging
from typing import Dict, Iterable, List, Optional, Union

import numpy as np

from app.core.errors import DataError, DimensionError, UsageError
from app.schemas.metrics import ErrorReport

logger = logging.getLogger(__name__)

PERCENTILES = (50, 90, 99)


def error_rate(pred: np.ndarray, truth: np.ndarray) -> float:
    """Fraction of mismatched labels"""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise DimensionError(f"prediction length {pred.shape} differs from truth length {truth.shape}")
    if pred.size == 0:
        raise UsageError("error rate needs at least one label")
    return float(np.mean(pred != truth))


def rmse(truth: np.ndarray, recon: np.ndarray) -> float:
    """||T - R||_F^2 / ||T||_F^2 * 100"""
    truth = np.asarray(truth, dtype=np.float64)
    recon = np.asarray(recon, dtype=np.float64)
    if truth.shape != recon.shape:
        raise DimensionError(f"matrices differ in shape: {truth.shape} vs {recon.shape}")
    denom = float(np.sum(truth * truth))
    if denom == 0:
        raise DataError("rmse is undefined for a zero-norm truth matrix")
    diff = truth - recon
    return float(np.sum(diff * diff)) / denom * 100.0


def summarize(errors: Iterable[float], swept: Optional[Union[int, float]] = None) -> ErrorReport:
    """Mean and population stddev of per-seed error rates"""
    errors = list(errors)
    if not errors:
        raise UsageError("cannot summarize an empty list of errors")
    return ErrorReport.from_errors(errors, swept)


def latency_percentiles(times: List[float]) -> Dict[str, float]:
    """p50 / p90 / p99 of per-point latencies in seconds; zeros for an empty list"""
    if len(times) == 0:
        return {f"p{p}": 0.0 for p in PERCENTILES}
    values = np.percentile(np.asarray(times, dtype=np.float64), PERCENTILES)
    return {f"p{p}": float(v) for p, v in zip(PERCENTILES, values)}
