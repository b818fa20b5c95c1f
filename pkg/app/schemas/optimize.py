"""
Reconstruction solver schemas
"""

from typing import List

import numpy as np
from pydantic import BaseModel, Field, field_validator

from app.schemas._arrays import frozen_array


SIMPLEX_TOLERANCE = 1e-10


class SimplexWeights(BaseModel):
    """Convex reconstruction coefficients z (z >= 0, sum(z) = 1)"""

    z: np.ndarray

    model_config = {
        "arbitrary_types_allowed": True,
        "frozen": True
    }

    @field_validator("z", mode="before")
    @classmethod
    def _check_simplex(cls, v):
        arr = frozen_array(v, dtype=np.float64, ndim=1, name="z")
        if arr.size == 0:
            raise ValueError("z must not be empty")
        if np.any(arr < 0):
            raise ValueError("z must be nonnegative")
        if abs(arr.sum() - 1.0) > SIMPLEX_TOLERANCE:
            raise ValueError(f"z must sum to 1, got {arr.sum()!r}")
        return arr

    @property
    def k(self) -> int:
        return int(self.z.shape[0])


class QpReport(BaseModel):
    """Diagnostics of a simplex least-squares solve"""

    objective: float = Field(ge=0)
    kkt_residual: float = Field(ge=0)
    iterations: int = Field(ge=0)
    active_set: List[int]
