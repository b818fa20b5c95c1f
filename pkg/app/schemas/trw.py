"""
Tired random walk schemas
"""

from typing import Literal

import numpy as np
from pydantic import BaseModel, Field, field_validator

from app.core.config import settings
from app.schemas._arrays import frozen_array


class TrwConfig(BaseModel):
    """Tired random walk parameters"""

    alpha: float = Field(default=0.5, gt=0, lt=1)
    route: Literal["direct", "spd-fast"] = "spd-fast"
    solve_tolerance: float = Field(default=settings.SOLVE_TOLERANCE, gt=0)

    model_config = {"frozen": True}


class TrwModel(BaseModel):
    """Fitted similarity state: P, D, P_TRW and the symmetric TRW weights"""

    transition: np.ndarray
    degrees: np.ndarray
    ptrw: np.ndarray
    sym_weights: np.ndarray
    config: TrwConfig

    model_config = {
        "arbitrary_types_allowed": True,
        "frozen": True
    }

    @field_validator("transition", "ptrw", "sym_weights", mode="before")
    @classmethod
    def _check_square(cls, v):
        arr = frozen_array(v, dtype=np.float64, ndim=2, name="matrix")
        if arr.shape[0] != arr.shape[1]:
            raise ValueError(f"matrix must be square, got shape {arr.shape}")
        return arr

    @field_validator("degrees", mode="before")
    @classmethod
    def _check_degrees(cls, v):
        arr = frozen_array(v, dtype=np.float64, ndim=1, name="degrees")
        if np.any(arr <= 0):
            raise ValueError("degrees must be positive")
        return arr

    @property
    def n(self) -> int:
        return int(self.ptrw.shape[0])
