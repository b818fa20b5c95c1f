"""
Dataset schemas
"""

from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from app.schemas._arrays import frozen_array


class Dataset(BaseModel):
    """Sample matrix plus a working label vector.

    Labels are coded 1..C; 0 marks an unlabeled row. ``truth`` carries the
    ground-truth labels out-of-band so scoring never reads the working vector.
    """

    samples: np.ndarray
    labels: np.ndarray
    truth: Optional[np.ndarray] = None
    class_names: List[str]
    name: str = "dataset"

    model_config = {
        "arbitrary_types_allowed": True,
        "frozen": True
    }

    @field_validator("samples", mode="before")
    @classmethod
    def _check_samples(cls, v):
        arr = frozen_array(v, dtype=np.float64, ndim=2, name="samples", finite=False)
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.all(np.isfinite(arr), axis=1))[0])
            raise ValueError(f"sample row {bad} contains non-finite values")
        return arr

    @field_validator("labels", "truth", mode="before")
    @classmethod
    def _check_labels(cls, v):
        if v is None:
            return None
        return frozen_array(v, dtype=np.int64, ndim=1, name="labels")

    @model_validator(mode="after")
    def _check_consistency(self):
        n = self.samples.shape[0]
        n_classes = len(self.class_names)
        if self.labels.shape[0] != n:
            raise ValueError(f"labels has length {self.labels.shape[0]}, expected {n}")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() > n_classes):
            raise ValueError(f"labels must lie in 0..{n_classes}")
        if self.truth is not None:
            if self.truth.shape[0] != n:
                raise ValueError(f"truth has length {self.truth.shape[0]}, expected {n}")
            if self.truth.size and (self.truth.min() < 0 or self.truth.max() > n_classes):
                raise ValueError(f"truth must lie in 0..{n_classes}")
        return self

    @classmethod
    def from_arrays(
        cls,
        samples,
        labels,
        truth=None,
        class_names: Optional[List[str]] = None,
        name: str = "dataset"
    ) -> "Dataset":
        """Build a dataset, naming classes 1..C when no names are given"""
        if class_names is None:
            top = int(np.max(labels, initial=0))
            if truth is not None:
                top = max(top, int(np.max(truth, initial=0)))
            class_names = [str(c) for c in range(1, top + 1)]
        return cls(samples=samples, labels=labels, truth=truth, class_names=class_names, name=name)

    @property
    def n(self) -> int:
        return int(self.samples.shape[0])

    @property
    def d(self) -> int:
        return int(self.samples.shape[1])

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def labeled_indices(self) -> np.ndarray:
        return np.flatnonzero(self.labels > 0)

    @property
    def unlabeled_indices(self) -> np.ndarray:
        return np.flatnonzero(self.labels == 0)

    @property
    def l(self) -> int:  # noqa: E743
        return int(np.count_nonzero(self.labels))

    @property
    def ground_truth(self) -> np.ndarray:
        """Truth when carried, else the working labels"""
        return self.truth if self.truth is not None else self.labels

    def with_labels(self, labels: np.ndarray) -> "Dataset":
        """Copy with a new working label vector; truth is preserved"""
        return Dataset(
            samples=self.samples,
            labels=labels,
            truth=self.ground_truth,
            class_names=self.class_names,
            name=self.name
        )


class SplitSpec(BaseModel):
    """Per-class labeled/unlabeled split"""

    labels_per_class: int = Field(ge=1)
    seed: int = Field(ge=0, lt=2 ** 64)
    mode: Literal["random-per-class"] = "random-per-class"

    model_config = {"frozen": True}
