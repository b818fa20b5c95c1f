"""
Online classification schemas
"""

import numpy as np
from pydantic import BaseModel, Field, field_validator

from app.schemas._arrays import frozen_array
from app.schemas.optimize import SimplexWeights


class OnlineResult(BaseModel):
    """Classification of one streamed sample"""

    predicted_class: int = Field(ge=1)
    weights_to_labeled: np.ndarray
    scores: np.ndarray
    recon_error: float = Field(ge=0)
    z: SimplexWeights
    neighbors: np.ndarray
    elapsed_seconds: float = Field(default=0.0, ge=0)

    model_config = {
        "arbitrary_types_allowed": True,
        "frozen": True
    }

    @field_validator("weights_to_labeled", mode="before")
    @classmethod
    def _check_weights(cls, v):
        arr = frozen_array(v, dtype=np.float64, ndim=1, name="weights_to_labeled")
        if np.any(arr < 0):
            raise ValueError("weights_to_labeled must be nonnegative")
        return arr

    @field_validator("scores", mode="before")
    @classmethod
    def _freeze_scores(cls, v):
        return frozen_array(v, dtype=np.float64, ndim=1, name="scores")

    @field_validator("neighbors", mode="before")
    @classmethod
    def _freeze_neighbors(cls, v):
        return frozen_array(v, dtype=np.int64, ndim=1, name="neighbors")


class OnlineStats(BaseModel):
    """Counters of an online session"""

    points_classified: int = 0
    cumulative_seconds: float = 0.0
