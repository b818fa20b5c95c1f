"""
Run configuration for the command-line harness
"""

from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from app.core.config import settings
from app.schemas.classify import ALGORITHMS, AlgorithmParams, TuneGrid


SYNTHETIC_KINDS = ("two-arcs", "arch-and-s", "circles", "noisy-gap")

LIST_FIELDS = (
    "algorithms", "labels_per_class", "sigma_grid", "alpha_grid",
    "geo_grid", "online_counts", "ratios"
)


class RunConfig(BaseModel):
    """Every parameter a subcommand may read, validated before any computation"""

    # Dataset source
    data: Optional[Path] = None
    kind: Optional[Literal["two-arcs", "arch-and-s", "circles", "noisy-gap"]] = None
    per_class: int = Field(default=500, ge=10)
    noise: float = Field(default=0.05, ge=0)
    bridging: Optional[int] = Field(default=None, ge=0)
    data_seed: int = Field(default=7, ge=0)
    label_column: str = "-1"
    unlabeled_marker: Optional[str] = None
    standardize: bool = False

    # Output
    out: Path = Path("results")

    # Protocol
    algorithms: List[Literal["knn", "wknn", "gknn", "mknn"]] = Field(default=list(ALGORITHMS), min_length=1)
    k: int = Field(default=settings.DEFAULT_K, ge=1)
    k_min: int = Field(default=1, ge=1)
    k_max: int = Field(default=10, ge=1)
    labels_per_class: List[int] = Field(default=[3], min_length=1)
    seeds: int = Field(default=10, ge=1)
    seed: int = Field(default=0, ge=0)

    # Model parameters (used as-is unless a grid is given)
    sigma: float = Field(default=settings.DEFAULT_SIGMA, gt=0)
    alpha: float = Field(default=settings.DEFAULT_ALPHA, gt=0, lt=1)
    tree_depth: int = Field(default=settings.DEFAULT_TREE_DEPTH, ge=0)
    theta_fraction: float = Field(default=settings.DEFAULT_THETA_FRACTION, gt=0, lt=1)
    tree_branch: Optional[int] = Field(default=None, ge=1)
    route: Literal["direct", "spd-fast"] = "spd-fast"
    self_loops: bool = False
    geo_neighbors: int = Field(default=10, ge=1)

    # Grid search
    sigma_grid: List[float] = []
    alpha_grid: List[float] = []
    geo_grid: List[int] = []
    folds: int = Field(default=2, ge=2)

    # Online experiment
    train_labels_per_class: int = Field(default=10, ge=1)
    online_counts: List[int] = [100]
    k_recon: Optional[int] = Field(default=None, ge=1)
    full_rows: bool = False
    refit_limit: Optional[int] = Field(default=None, ge=0)

    # Time-cost experiment
    ratios: List[float] = [0.1, 0.25, 0.5]
    repeats: int = Field(default=10, ge=1)

    workers: int = Field(default=settings.WORKERS, ge=1)

    model_config = {"extra": "forbid"}

    @field_validator(*LIST_FIELDS, mode="before")
    @classmethod
    def _split_lists(cls, v):
        if isinstance(v, str):
            return [item.strip() for item in v.split(",") if item.strip()]
        return v

    @model_validator(mode="after")
    def _check_ranges(self):
        if self.k_min > self.k_max:
            raise ValueError(f"k_min={self.k_min} exceeds k_max={self.k_max}")
        if any(r <= 0 or r >= 1 for r in self.ratios):
            raise ValueError("ratios must lie in (0, 1)")
        if any(c < 0 for c in self.online_counts):
            raise ValueError("online_counts must be nonnegative")
        return self

    def params(self, **overrides) -> AlgorithmParams:
        """Classifier parameters taken from this run configuration"""
        values = dict(
            k=self.k,
            sigma=self.sigma,
            alpha=self.alpha,
            geo_neighbors=self.geo_neighbors,
            tree_depth=self.tree_depth,
            theta_fraction=self.theta_fraction,
            tree_branch=self.tree_branch,
            route=self.route,
            self_loops=self.self_loops
        )
        values.update(overrides)
        return AlgorithmParams(**values)

    def grid(self) -> Optional[TuneGrid]:
        """The search grid, or None when no grid was requested"""
        if not (self.sigma_grid or self.alpha_grid or self.geo_grid):
            return None
        return TuneGrid(
            sigma_values=self.sigma_grid or [self.sigma],
            alpha_values=self.alpha_grid or [self.alpha],
            geo_neighbors_values=self.geo_grid or [self.geo_neighbors],
            folds=self.folds
        )
