"""
Shared fixtures for the manifold kNN test suite
"""

import os
from pathlib import Path

import numpy as np
import pytest

from app.schemas.dataset import Dataset, SplitSpec
from app.schemas.graph import GraphConfig
from app.schemas.trw import TrwConfig
from app.services.classify_service import fit_mknn
from app.services.data_service import make_synthetic, split


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def two_arcs() -> Dataset:
    """Small fully labeled two-arcs set (60 points)"""
    return make_synthetic("two-arcs", 30, noise=0.05, seed=7)


@pytest.fixture(scope="session")
def two_arcs_split(two_arcs) -> Dataset:
    """Three labels per class, the rest unlabeled"""
    return split(two_arcs, SplitSpec(labels_per_class=3, seed=0))


@pytest.fixture(scope="session")
def fitted_model(two_arcs_split):
    return fit_mknn(two_arcs_split, GraphConfig(sigma=0.2), TrwConfig(alpha=0.5), k=3)


@pytest.fixture
def blobs(rng) -> Dataset:
    """Two isotropic Gaussian blobs with half of the points labeled"""
    a = rng.normal([0.0, 0.0], 0.5, size=(40, 2))
    b = rng.normal([4.0, 4.0], 0.5, size=(40, 2))
    samples = np.vstack([a, b])
    truth = np.repeat([1, 2], 40)
    labels = truth.copy()
    labels[1::2] = 0
    return Dataset.from_arrays(samples, labels, truth=truth)


@pytest.fixture
def banknote_path() -> Path:
    """Path of the banknote CSV from MKNN_BANKNOTE_CSV; skips when absent"""
    path = os.environ.get("MKNN_BANKNOTE_CSV")
    if not path or not Path(path).is_file():
        pytest.skip("banknote CSV not available (set MKNN_BANKNOTE_CSV)")
    return Path(path)


@pytest.fixture
def random_weights():
    """Factory for symmetric positive Gaussian weights on random points in the unit square"""

    def build(rng, n: int, sigma: float = 0.5) -> np.ndarray:
        points = rng.uniform(0.0, 1.0, size=(n, 2))
        sq = ((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)
        weights = np.exp(-sq / (2.0 * sigma * sigma))
        weights = np.triu(weights) + np.triu(weights, 1).T
        np.fill_diagonal(weights, 0.0)
        return weights

    return build
