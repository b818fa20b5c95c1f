"""
Scoring schemas
"""

from typing import List, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator


class ErrorReport(BaseModel):
    """Error rates over repeated random splits for one swept value"""

    per_seed_errors: List[float] = Field(min_length=1)
    mean: float
    stddev: float
    k_or_labels: Optional[Union[int, float]] = None

    @model_validator(mode="after")
    def _check_summary(self):
        errors = np.asarray(self.per_seed_errors, dtype=float)
        if np.any((errors < 0) | (errors > 1)):
            raise ValueError("error rates must lie in [0, 1]")
        if not np.isclose(self.mean, errors.mean(), rtol=0, atol=1e-12):
            raise ValueError("mean does not match per_seed_errors")
        if not np.isclose(self.stddev, errors.std(), rtol=0, atol=1e-12):
            raise ValueError("stddev does not match per_seed_errors")
        return self

    @classmethod
    def from_errors(cls, errors: List[float], swept=None) -> "ErrorReport":
        arr = np.asarray(errors, dtype=float)
        return cls(
            per_seed_errors=[float(e) for e in arr],
            mean=float(arr.mean()),
            stddev=float(arr.std()),
            k_or_labels=swept
        )
