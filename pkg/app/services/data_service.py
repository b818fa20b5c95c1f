"""
Data Service
CSV ingestion and export, synthetic manifold generators and seeded splits
"""

import logging
import re
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy.spatial.distance import cdist

from app.core.config import settings
from app.core.errors import (
    DataError, EmptyDatasetError, NoLabeledSamplesError, ParseError, SplitError, UsageError
)
from app.schemas.dataset import Dataset, SplitSpec
from app.services.report_service import atomic_write_text

logger = logging.getLogger(__name__)

Curve = Callable[[np.ndarray], np.ndarray]


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def _is_number(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def _to_float(token: str) -> float:
    try:
        return float(token.strip())
    except ValueError:
        return np.nan


def _class_order(tokens) -> list:
    """Distinct label tokens, numerically sorted when they are all numbers"""
    distinct = set(tokens)
    if all(_is_number(t) for t in distinct):
        return sorted(distinct, key=lambda t: (float(t), t))
    return sorted(distinct)


def load_csv(
    path: Union[str, Path],
    label_column: Union[str, int] = -1,
    unlabeled_marker: Optional[str] = None,
    header: Optional[bool] = None
) -> Dataset:
    """
    Load a dataset from a CSV file

    Args:
        path: CSV file, one sample per row
        label_column: column name (requires a header) or integer index
        unlabeled_marker: label token meaning "no label"; defaults to an
            empty field or "?"
        header: whether the first line is a header; detected when None

    Returns:
        Dataset with classes 1..C in sorted label-token order
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path} does not exist")

    markers = set(settings.UNLABELED_MARKERS) if unlabeled_marker is None else {unlabeled_marker}

    try:
        raw = pd.read_csv(path, header=None, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise EmptyDatasetError(f"{path} contains no rows")
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        raise ParseError(f"malformed row in {path.name}: {e}", int(match.group(1)) if match else 0)
    except UnicodeDecodeError as e:
        raise ParseError(f"{path.name} is not UTF-8 text: {e.reason} at byte {e.start}", 0)

    if isinstance(label_column, str) and re.fullmatch(r"-?\d+", label_column.strip()):
        label_column = int(label_column)
    n_cols = raw.shape[1]

    if isinstance(label_column, str):
        header = True
    elif header is None:
        label_idx = label_column % n_cols
        first = [str(v).strip() for j, v in enumerate(raw.iloc[0]) if j != label_idx]
        header = not all(_is_number(tok) for tok in first)

    offset = 1
    names = list(range(n_cols))
    if header:
        names = [str(v).strip() for v in raw.iloc[0]]
        raw = raw.iloc[1:].reset_index(drop=True)
        offset = 2

    if isinstance(label_column, str):
        if label_column not in names:
            raise UsageError(f"label column {label_column!r} not found in header of {path.name}")
        label_idx = names.index(label_column)
    else:
        if not -n_cols <= label_column < n_cols:
            raise UsageError(f"label column {label_column} out of range for {n_cols} columns")
        label_idx = label_column % n_cols

    if raw.shape[0] == 0:
        raise EmptyDatasetError(f"{path} contains no sample rows")
    if n_cols < 2:
        raise ParseError("expected at least one feature column and a label column", offset)

    short = raw.isna().any(axis=1).to_numpy()
    if short.any():
        raise ParseError("malformed row (too few fields)", int(np.flatnonzero(short)[0]) + offset)

    feature_cols = [j for j in range(n_cols) if j != label_idx]
    # float() is correctly rounded, so repr-formatted values reload bit-exactly
    samples = raw.iloc[:, feature_cols].map(_to_float).to_numpy(dtype=np.float64)
    bad = ~np.all(np.isfinite(samples), axis=1)
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise ParseError(f"non-numeric feature in {raw.iloc[row].tolist()}", row + offset)

    tokens = raw.iloc[:, label_idx].str.strip().tolist()
    present = [t for t in tokens if t not in markers]
    if not present:
        raise NoLabeledSamplesError()

    class_names = _class_order(present)
    code = {name: c for c, name in enumerate(class_names, start=1)}
    labels = np.array([0 if t in markers else code[t] for t in tokens], dtype=np.int64)

    ds = Dataset(samples=samples, labels=labels, class_names=class_names, name=path.stem)
    logger.info(f"Loaded {path.name}: n={ds.n} d={ds.d} C={ds.n_classes} l={ds.l}")
    return ds


def save_csv(ds: Dataset, path: Union[str, Path], use_truth: bool = False) -> Path:
    """Write a dataset in the format ``load_csv`` reads; floats round-trip exactly"""
    labels = ds.ground_truth if use_truth else ds.labels
    frame = pd.DataFrame(ds.samples, columns=[f"x{j + 1}" for j in range(ds.d)])
    frame = frame.map(lambda v: repr(float(v)))
    frame["label"] = ["" if c == 0 else ds.class_names[c - 1] for c in labels]
    return atomic_write_text(path, frame.to_csv(index=False, lineterminator="\n"))


# ---------------------------------------------------------------------------
# Synthetic manifolds
# ---------------------------------------------------------------------------

def _upper_arc(t):
    a = np.pi * t
    return np.column_stack([np.cos(a), np.sin(a)])


def _lower_arc(t):
    a = np.pi * t
    return np.column_stack([1.0 - np.cos(a), 0.5 - np.sin(a)])


def _outer_arch(t):
    a = np.pi * t
    return np.column_stack([2.0 * np.cos(a), 2.0 * np.sin(a)])


def _reflected_s(t):
    u = 2.0 * t - 1.0
    return np.column_stack([-0.6 * np.sin(np.pi * u), 0.9 + 0.6 * u])


def _outer_circle(t):
    a = 2.0 * np.pi * t
    return np.column_stack([np.cos(a), np.sin(a)])


def _inner_circle(t):
    a = 2.0 * np.pi * t
    return np.column_stack([0.5 * np.cos(a), 0.5 * np.sin(a)])


CURVES: Dict[str, Tuple[Curve, Curve]] = {
    "two-arcs": (_upper_arc, _lower_arc),
    "arch-and-s": (_outer_arch, _reflected_s),
    "circles": (_outer_circle, _inner_circle),
    "noisy-gap": (_upper_arc, _lower_arc),
}


def make_synthetic(
    kind: str,
    points_per_class: int,
    noise: float = 0.05,
    seed: int = 0,
    bridging: Optional[int] = None
) -> Dataset:
    """
    Generate a fully labeled two-class 2-D manifold dataset

    Each class is a parameterized curve sampled at uniform random parameters
    with Gaussian jitter. Bridging points lie on segments from a class curve
    toward the nearest point of the other curve, less than halfway across the
    gap, and count toward their class's points_per_class.

    Args:
        kind: one of CURVES
        points_per_class: rows per class (>= 10)
        noise: standard deviation of the Gaussian jitter
        seed: generator seed
        bridging: total bridging points; defaults to points_per_class // 10
            for "noisy-gap" and 0 otherwise
    """
    if kind not in CURVES:
        raise UsageError(f"unknown synthetic kind {kind!r}; expected one of {sorted(CURVES)}")
    if points_per_class < 10:
        raise UsageError("points_per_class must be at least 10")
    if noise < 0:
        raise UsageError("noise must be nonnegative")
    if bridging is None:
        bridging = points_per_class // 10 if kind == "noisy-gap" else 0
    shares = (bridging - bridging // 2, bridging // 2)
    if max(shares) > points_per_class:
        raise UsageError("bridging count exceeds the class budget")

    rng = np.random.default_rng(seed)
    curves = CURVES[kind]
    dense = np.linspace(0.0, 1.0, 2001)
    references = [curve(dense) for curve in curves]

    blocks, labels = [], []
    for c, curve in enumerate(curves):
        on_curve = points_per_class - shares[c]
        pts = curve(rng.uniform(0.0, 1.0, on_curve))
        if noise > 0:
            pts = pts + rng.normal(0.0, noise, size=pts.shape)

        if shares[c]:
            anchors = curve(rng.uniform(0.0, 1.0, shares[c]))
            other = references[1 - c]
            nearest = other[np.argmin(cdist(anchors, other), axis=1)]
            lam = rng.uniform(0.1, 0.45, size=(shares[c], 1))
            pts = np.vstack([pts, anchors + lam * (nearest - anchors)])

        blocks.append(pts)
        labels.append(np.full(points_per_class, c + 1, dtype=np.int64))

    samples = np.vstack(blocks)
    y = np.concatenate(labels)
    logger.debug(f"Generated {kind}: {samples.shape[0]} points, {bridging} bridging")
    return Dataset(samples=samples, labels=y, truth=y, class_names=["1", "2"], name=kind)


# ---------------------------------------------------------------------------
# Splits and preprocessing
# ---------------------------------------------------------------------------

def split(ds: Dataset, spec: SplitSpec) -> Dataset:
    """Keep exactly spec.labels_per_class random labels per class"""
    truth = ds.ground_truth
    rng = np.random.default_rng(spec.seed)
    labels = np.zeros(ds.n, dtype=np.int64)

    for c in range(1, ds.n_classes + 1):
        members = np.flatnonzero(truth == c)
        if members.size < spec.labels_per_class:
            raise SplitError(
                f"class {ds.class_names[c - 1]!r} has {members.size} samples, "
                f"fewer than labels_per_class={spec.labels_per_class}"
            )
        chosen = rng.choice(members, size=spec.labels_per_class, replace=False)
        labels[chosen] = c

    return ds.with_labels(labels)


def split_fraction(ds: Dataset, ratio: float, seed: int) -> Dataset:
    """Label a stratified fraction of each class (at least one per class)"""
    if not 0 < ratio < 1:
        raise UsageError("ratio must lie in (0, 1)")
    truth = ds.ground_truth
    rng = np.random.default_rng(seed)
    labels = np.zeros(ds.n, dtype=np.int64)
    for c in range(1, ds.n_classes + 1):
        members = np.flatnonzero(truth == c)
        if members.size == 0:
            continue
        count = max(1, int(round(ratio * members.size)))
        labels[rng.choice(members, size=count, replace=False)] = c
    return ds.with_labels(labels)


def split_holdout(ds: Dataset, count: int, seed: int) -> Tuple[Dataset, np.ndarray, np.ndarray]:
    """
    Remove ``count`` random rows to stream later

    Returns:
        (remaining dataset, held-out samples, held-out ground truth)
    """
    if not 0 <= count < ds.n:
        raise SplitError(f"cannot hold out {count} of {ds.n} samples")
    rng = np.random.default_rng(seed)
    held = np.sort(rng.choice(ds.n, size=count, replace=False))
    keep = np.setdiff1d(np.arange(ds.n), held)
    truth = ds.ground_truth
    base = Dataset(
        samples=ds.samples[keep],
        labels=ds.labels[keep],
        truth=truth[keep],
        class_names=ds.class_names,
        name=ds.name
    )
    return base, ds.samples[held].copy(), truth[held].copy()


def standardize(ds: Dataset) -> Dataset:
    """Z-score every feature; constant columns are only centered"""
    mean = ds.samples.mean(axis=0)
    std = ds.samples.std(axis=0)
    std[std == 0] = 1.0
    return Dataset(
        samples=(ds.samples - mean) / std,
        labels=ds.labels,
        truth=ds.truth,
        class_names=ds.class_names,
        name=ds.name
    )
