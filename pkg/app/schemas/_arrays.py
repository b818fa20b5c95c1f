"""
Helpers for numpy-backed schema fields
"""

import numpy as np


def frozen_array(value, dtype=float, ndim: int = None, name: str = "array", finite: bool = True) -> np.ndarray:
    """Copy ``value`` into a read-only numpy array, checking its rank and, for floats, finiteness"""
    arr = np.array(value, dtype=dtype, copy=True)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if finite and np.issubdtype(arr.dtype, np.floating) and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr
