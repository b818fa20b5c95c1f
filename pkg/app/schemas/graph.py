"""
Constrained graph schemas
"""

from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator

from app.schemas._arrays import frozen_array


class GraphConfig(BaseModel):
    """Parameters of the constrained graph construction"""

    sigma: float = Field(gt=0)
    tree_depth: int = Field(default=2, ge=0)
    theta_fraction: float = Field(default=0.1, gt=0, lt=1)
    # None means "use the classifier's k"
    tree_branch: Optional[int] = Field(default=None, ge=1)
    self_loops: bool = False
    sparsity_threshold: float = Field(default=0.0, ge=0, lt=1)
    # Write each tree factor to both W_ij and W_ji instead of only W_ij
    symmetric_strengthening: bool = False

    model_config = {"frozen": True}


class StrengthenedTree(BaseModel):
    """R-level nearest-neighbor tree rooted at a labeled sample"""

    root: int
    levels: List[List[int]]
    edges: List[Tuple[int, int, int]]

    model_config = {"frozen": True}

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def nodes(self) -> List[int]:
        return [node for level in self.levels for node in level]


class ConstrainedGraph(BaseModel):
    """Symmetric edge-weight matrix W after all construction steps"""

    weights: np.ndarray
    config: GraphConfig
    trees: List[StrengthenedTree] = []

    model_config = {
        "arbitrary_types_allowed": True,
        "frozen": True
    }

    @field_validator("weights", mode="before")
    @classmethod
    def _check_weights(cls, v):
        arr = frozen_array(v, dtype=np.float64, ndim=2, name="weights")
        if arr.shape[0] != arr.shape[1]:
            raise ValueError(f"weights must be square, got shape {arr.shape}")
        return arr

    @property
    def n(self) -> int:
        return int(self.weights.shape[0])
